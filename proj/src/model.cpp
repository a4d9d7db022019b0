#include "enc/model.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace enc {

std::string_view to_string(Backbone b) {
  switch (b) {
    case Backbone::Gcn: return "gcn";
    case Backbone::Gat: return "gat";
    case Backbone::Gcnii: return "gcnii";
  }
  return "unknown";
}

Backbone parse_backbone(std::string_view name) {
  if (name == "gcn") return Backbone::Gcn;
  if (name == "gat") return Backbone::Gat;
  if (name == "gcnii") return Backbone::Gcnii;
  throw std::invalid_argument("unknown backbone '" + std::string(name) + "' (expected gcn, gat or gcnii)");
}

void ModelConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("model: layers must be >= 1");
  if (channels < 1) throw std::invalid_argument("model: channels must be >= 1");
  if (classes < 1) throw std::invalid_argument("model: classes must be >= 1");
  if (in_channels < 1) throw std::invalid_argument("model: in_channels must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("model: dropout must lie in [0, 1)");
  if (!(gcnii_alpha >= 0.0 && gcnii_alpha <= 1.0)) throw std::invalid_argument("model: gcnii alpha must lie in [0, 1]");
  if (!(gcnii_theta > 0.0)) throw std::invalid_argument("model: gcnii theta must be positive");
  if (gat_heads < 1 || channels % gat_heads != 0) {
    throw std::invalid_argument("model: channels must be divisible by the GAT head count");
  }
}

double ModelConfig::gcnii_beta(int layer) const { return std::log(gcnii_theta / layer + 1.0); }

// ---- layers --------------------------------------------------------------

namespace layers {

ad::Var gcn(const GraphOperators& ops, const ad::Var& h, const ad::Var& w) {
  ad::Tape& tape = h.tape();
  const ad::Var p = tape.constant(ops.propagation_values);
  return ad::relu(ad::spmm(ops.propagation_layout, false, p, ad::matmul(h, w)));
}

ad::Var gat_attention(const GraphOperators& ops, const ad::Var& z, const ad::Var& att, Real slope) {
  const ad::Var src = ad::gather_rows(z, ops.propagation_layout->entry_rows());
  const ad::Var dst = ad::gather_rows(z, ops.propagation_layout->entry_cols());
  const ad::Var pair[] = {src, dst};
  const ad::Var scores = ad::leaky_relu(ad::matmul(ad::concat_cols(pair), att), slope);
  return ad::segment_softmax(ops.propagation_layout, scores);
}

ad::Var gat(const GraphOperators& ops, const ad::Var& h, const ad::Var& w, const ad::Var& w_att,
            std::span<const ad::Var> att_per_head, Real slope) {
  const auto heads = static_cast<Eigen::Index>(att_per_head.size());
  const Eigen::Index width = h.cols() / heads;
  const ad::Var transformed = ad::matmul(h, w);
  const ad::Var attended = ad::matmul(h, w_att);
  if (heads == 1) {
    const ad::Var alpha = gat_attention(ops, attended, att_per_head[0], slope);
    return ad::relu(ad::spmm(ops.propagation_layout, false, alpha, transformed));
  }
  std::vector<ad::Var> outs;
  outs.reserve(att_per_head.size());
  for (Eigen::Index k = 0; k < heads; ++k) {
    const ad::Var z = ad::slice_cols(attended, k * width, width);
    const ad::Var alpha = gat_attention(ops, z, att_per_head[static_cast<std::size_t>(k)], slope);
    outs.push_back(ad::spmm(ops.propagation_layout, false, alpha, ad::slice_cols(transformed, k * width, width)));
  }
  return ad::relu(ad::concat_cols(outs));
}

ad::Var gcnii(const GraphOperators& ops, const ad::Var& h, const ad::Var& h0, const ad::Var& w,
              Real alpha, Real beta) {
  ad::Tape& tape = h.tape();
  const ad::Var p = tape.constant(ops.propagation_values);
  const ad::Var support = ad::add(ad::scale(ad::spmm(ops.propagation_layout, false, p, h), Real(1) - alpha),
                                  ad::scale(h0, alpha));
  return ad::relu(ad::add(ad::scale(ad::matmul(support, w), beta), ad::scale(support, Real(1) - beta)));
}

}  // namespace layers

// ---- Model ---------------------------------------------------------------

Model::Model(ModelConfig config, Rng& rng) : config_(config) {
  config_.validate();
  const auto c = static_cast<Eigen::Index>(config_.channels);
  params_.push_back({"embed", ParamGroup::OpenClose, ad::glorot_init(config_.in_channels, c, rng)});
  for (int l = 0; l < config_.layers; ++l) {
    const std::string prefix = "layers." + std::to_string(l) + ".";
    params_.push_back({prefix + "weight", ParamGroup::Gnn, ad::identity_init(c)});
    if (config_.backbone == Backbone::Gat) {
      const Eigen::Index width = c / config_.gat_heads;
      params_.push_back({prefix + "att_weight", ParamGroup::Gnn, ad::glorot_init(c, c, rng)});
      for (int h = 0; h < config_.gat_heads; ++h) {
        params_.push_back({prefix + "att." + std::to_string(h), ParamGroup::Gnn, ad::glorot_init(2 * width, 1, rng)});
      }
    }
  }
  params_.push_back({"classify", ParamGroup::OpenClose, ad::glorot_init(c, config_.classes, rng)});
}

std::size_t Model::params_per_layer() const {
  return config_.backbone == Backbone::Gat ? 2 + static_cast<std::size_t>(config_.gat_heads) : 1;
}

std::size_t Model::num_scalars() const {
  std::size_t total = 0;
  for (const Parameter& p : params_) total += static_cast<std::size_t>(p.value.size());
  return total;
}

std::vector<ad::Var> Model::bind(ad::Tape& tape) const {
  std::vector<ad::Var> vars;
  vars.reserve(params_.size());
  for (const Parameter& p : params_) vars.push_back(tape.variable(p.value));
  return vars;
}

ad::Var Model::forward(const GraphOperators& ops, const ad::Var& x,
                       std::span<const ad::Var> params, Mode mode, Rng& rng) const {
  if (params.size() != params_.size()) throw ShapeError("forward: parameter count mismatch");
  if (x.rows() != ops.num_nodes) throw ShapeError("forward: feature rows do not match node count");
  if (x.cols() != config_.in_channels) throw ShapeError("forward: feature columns do not match in_channels");

  const bool train = mode == Mode::Train;
  const auto p = static_cast<Real>(config_.dropout);
  const ad::Var embedded = ad::relu(ad::matmul(ad::dropout(x, p, rng, train), params[0]));
  ad::Var h = embedded;
  const std::size_t per_layer = params_per_layer();
  for (int l = 0; l < config_.layers; ++l) {
    const std::size_t base = 1 + static_cast<std::size_t>(l) * per_layer;
    switch (config_.backbone) {
      case Backbone::Gcn:
        h = layers::gcn(ops, h, params[base]);
        break;
      case Backbone::Gat:
        h = layers::gat(ops, h, params[base], params[base + 1], params.subspan(base + 2, per_layer - 2),
                        static_cast<Real>(config_.leaky_slope));
        break;
      case Backbone::Gcnii:
        h = layers::gcnii(ops, h, embedded, params[base], static_cast<Real>(config_.gcnii_alpha),
                          static_cast<Real>(config_.gcnii_beta(l + 1)));
        break;
    }
  }
  return ad::matmul(ad::dropout(h, p, rng, train), params.back());
}

Matrix Model::logits(const GraphOperators& ops, const Matrix& x) const {
  ad::Tape tape;
  ad::NoGradGuard guard(tape);
  const std::vector<ad::Var> vars = bind(tape);
  Rng unused(0);
  return forward(ops, tape.constant(x), vars, Mode::Eval, unused).value();
}

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr const char* kCheckpointHeader = "enc-checkpoint v1";

std::string format_real(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(v));
  return buf;
}

}  // namespace

void Model::save(std::ostream& out) const {
  out << kCheckpointHeader << '\n';
  out << "backbone=" << to_string(config_.backbone) << '\n'
      << "layers=" << config_.layers << '\n'
      << "channels=" << config_.channels << '\n'
      << "classes=" << config_.classes << '\n'
      << "in_channels=" << config_.in_channels << '\n'
      << "dropout=" << format_real(static_cast<Real>(config_.dropout)) << '\n'
      << "leaky_slope=" << format_real(static_cast<Real>(config_.leaky_slope)) << '\n'
      << "gat_heads=" << config_.gat_heads << '\n'
      << "gcnii_alpha=" << format_real(static_cast<Real>(config_.gcnii_alpha)) << '\n'
      << "gcnii_theta=" << format_real(static_cast<Real>(config_.gcnii_theta)) << '\n';
  for (const Parameter& p : params_) {
    out << "param " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_real(p.value(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

Model Model::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointHeader) {
    throw std::runtime_error("checkpoint: missing '" + std::string(kCheckpointHeader) + "' header");
  }
  std::map<std::string, std::string> kv;
  while (std::getline(in, line) && line.rfind("param ", 0) != 0) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("checkpoint: malformed config line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(std::string("checkpoint: missing key ") + key);
    return it->second;
  };
  ModelConfig cfg;
  cfg.backbone = parse_backbone(get("backbone"));
  cfg.layers = std::stoi(get("layers"));
  cfg.channels = std::stoi(get("channels"));
  cfg.classes = std::stoi(get("classes"));
  cfg.in_channels = std::stoi(get("in_channels"));
  cfg.dropout = std::stod(get("dropout"));
  cfg.leaky_slope = std::stod(get("leaky_slope"));
  cfg.gat_heads = std::stoi(get("gat_heads"));
  cfg.gcnii_alpha = std::stod(get("gcnii_alpha"));
  cfg.gcnii_theta = std::stod(get("gcnii_theta"));
  Rng rng(0);
  Model model(cfg, rng);

  for (Parameter& p : model.params_) {
    std::istringstream header(line);
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    header >> tag >> name >> rows >> cols;
    if (tag != "param" || name != p.name || rows != p.value.rows() || cols != p.value.cols()) {
      throw std::runtime_error("checkpoint: expected parameter " + p.name + ", found '" + line + "'");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw std::runtime_error("checkpoint: truncated parameter " + p.name);
      std::istringstream values(line);
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string token;
        if (!(values >> token)) throw std::runtime_error("checkpoint: short row in parameter " + p.name);
        p.value(r, c) = static_cast<Real>(std::strtod(token.c_str(), nullptr));
      }
    }
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: truncated after " + p.name);
  }
  if (line != "end") throw std::runtime_error("checkpoint: expected 'end', found '" + line + "'");
  return model;
}

// ---- predictions -----------------------------------------------------------

Matrix predict(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Real m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    m.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace enc
