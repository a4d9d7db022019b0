#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enc/autodiff.hpp"
#include "enc/operators.hpp"

namespace enc {

enum class Backbone { Gcn, Gat, Gcnii };
enum class Mode { Train, Eval };

/// Optimizer parameter groups: the 1x1 opening/closing convolutions and the
/// GNN layers carry separate learning rates and weight decays.
enum class ParamGroup { OpenClose, Gnn };

std::string_view to_string(Backbone b);
/// Accepts "gcn", "gat", "gcnii" (case-sensitive). Throws std::invalid_argument.
Backbone parse_backbone(std::string_view name);

struct ModelConfig {
  Backbone backbone = Backbone::Gcn;
  int layers = 2;
  int channels = 64;
  int classes = 0;
  int in_channels = 0;
  double dropout = 0.5;
  double leaky_slope = 0.2;
  int gat_heads = 1;
  double gcnii_alpha = 0.1;
  double gcnii_theta = 0.5;

  void validate() const;
  /// GCNII identity-mapping strength ln(theta / l + 1) for 1-based layer l.
  [[nodiscard]] double gcnii_beta(int layer) const;
};

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::Gnn;
  Matrix value;
};

/// Dropout -> embed -> ReLU -> L backbone layers -> Dropout -> classify.
///
/// Parameter order is stable: embed, then per layer W (identity init) and for
/// GAT the attention transform W̃ and one attention vector per head, then
/// classify. The optimizer and the gradient-alignment loss rely on it.
class Model {
 public:
  Model(ModelConfig config, Rng& rng);

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] std::vector<Parameter>& parameters() { return params_; }
  [[nodiscard]] const std::vector<Parameter>& parameters() const { return params_; }
  [[nodiscard]] std::size_t num_scalars() const;

  /// Registers every parameter as a tape variable, in parameter order.
  [[nodiscard]] std::vector<ad::Var> bind(ad::Tape& tape) const;

  /// Logits n x k. `params` must come from bind() on x's tape.
  ad::Var forward(const GraphOperators& ops, const ad::Var& x,
                  std::span<const ad::Var> params, Mode mode, Rng& rng) const;

  /// Eval-mode logits without recording gradients.
  [[nodiscard]] Matrix logits(const GraphOperators& ops, const Matrix& x) const;

  /// Text checkpoint, first line "enc-checkpoint v1".
  void save(std::ostream& out) const;
  static Model load(std::istream& in);

 private:
  Model() = default;
  [[nodiscard]] std::size_t params_per_layer() const;

  ModelConfig config_;
  std::vector<Parameter> params_;
};

namespace layers {

/// relu(P̃ h W).
ad::Var gcn(const GraphOperators& ops, const ad::Var& h, const ad::Var& w);

/// Attention coefficients over the A + I pattern for one head:
/// softmax_j LeakyReLU(a^T [z_i || z_j]). `z` is n x d, `att` is 2d x 1.
ad::Var gat_attention(const GraphOperators& ops, const ad::Var& z, const ad::Var& att, Real slope);

/// relu(concat_h S_h (h W)[:, head h]) with S_h from gat_attention on h W̃.
ad::Var gat(const GraphOperators& ops, const ad::Var& h, const ad::Var& w, const ad::Var& w_att,
            std::span<const ad::Var> att_per_head, Real slope);

/// relu(beta S W + (1 - beta) S) with S = (1 - alpha) P̃ h + alpha h0.
ad::Var gcnii(const GraphOperators& ops, const ad::Var& h, const ad::Var& h0, const ad::Var& w,
              Real alpha, Real beta);

}  // namespace layers

/// Row-wise softmax of logits.
Matrix predict(const Matrix& logits);

/// Row-wise argmax.
std::vector<int> argmax_rows(const Matrix& m);

}  // namespace enc
