#include "enc/presets.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace enc {

namespace {

struct Row {
  const char* backbone;
  const char* dataset;
  std::array<std::string_view, 9> cells;
};

// Semi-supervised table, public split.
constexpr Row kSemi[] = {
    {"gcn", "cora", {"1e-3", "0.01", "1e-5", "1e-5", "64", "0.6", "1.0", "2.0", "1.0"}},
    {"gcn", "citeseer", {"1e-4", "5e-3", "5e-3", "1e-4", "256", "0.7", "0.8", "2.0", "1.0"}},
    {"gcn", "pubmed", {"0.01", "5e-4", "1e-4", "1e-4", "256", "0.5", "0.6", "2.0", "1.0"}},
    {"gat", "cora", {"1e-3", "0.01", "1e-4", "1e-4", "64", "0.6", "0.8", "1.0", "1.0"}},
    {"gat", "citeseer", {"0.01", "0.01", "1e-3", "1e-4", "256", "0.7", "1.0", "2.0", "2.0"}},
    {"gat", "pubmed", {"1e-3", "0.01", "1e-3", "1e-4", "256", "0.5", "1.0", "1.0", "1.0"}},
    {"gcnii", "cora", {"5e-3", "0.01", "1e-4", "1e-5", "64", "0.6", "0.8", "1.6", "1.2"}},
    {"gcnii", "citeseer", {"5e-3", "5e-3", "1e-5", "1e-4", "256", "0.7", "1.2", "1.0", "0.8"}},
    {"gcnii", "pubmed", {"5e-3", "1e-3", "0.05", "1e-4", "256", "0.5", "0.6", "1.6", "1.0"}},
};

// Fully-supervised table, 48/32/20 splits.
constexpr Row kFull[] = {
    {"gcn", "cora", {"1e-3", "0.01", "5e-3", "53-4", "64", "0.5", "0.6", "1.0", "1.0"}},
    {"gcn", "citeseer", {"1e-3", "0.01", "5e-3", "1e-4", "64", "0.5", "0.6", "0.6", "1.0"}},
    {"gcn", "pubmed", {"0.01", "0.01", "0.01", "5e-4", "64", "0.5", "1.2", "0.6", "1.0"}},
    {"gcn", "chameleon", {"1e-4", "0.05", "5e-5", "0", "64", "0.5", "2.0", "2.0", "1.2"}},
    {"gcn", "actor", {"1e-3", "0.05", "0.05", "1e-4", "64", "0.5", "1.2", "4.4", "1.8"}},
    {"gcn", "squirrel", {"5e-3", "0.05", "1e-5", "0", "64", "0.5", "4.2", "2.2", "2.6"}},
    {"gcn", "cornell", {"0.05", "1e-4", "1e-4", "1e-4", "64", "0.5", "1.0", "1.0", "2.0"}},
    {"gcn", "texas", {"1e-3", "0.05", "1e-5", "1e-5", "64", "0.5", "0.6", "2.0", "2.0"}},
    {"gcn", "wisconsin", {"1e-3", "0.05", "5e-3", "5e-4", "64", "0.5", "1.0", "1.0", "1.0"}},
    {"gcn", "ogbn-arxiv", {"0.01", "0.01", "0", "0", "256", "0", "2.0", "1.0", "0.8"}},
    {"gat", "cora", {"0.01", "0.01", "1e-3", "1e-4", "64", "0.5", "1.6", "1.2", "1.0"}},
    {"gat", "citeseer", {"1e-3", "0.05", "1e-5", "5e-4", "64", "0.5", "1.8", "1.2", "1.0"}},
    {"gat", "pubmed", {"1e-3", "1e-3", "1e-4", "1e-5", "64", "0.5", "1.6", "0.6", "0.6"}},
    {"gat", "chameleon", {"1e-3", "0.01", "5e-4", "1e-5", "64", "0.5", "1.0", "0.8", "1.0"}},
    {"gat", "actor", {"0.05", "1e-4", "1e-5", "5e-4", "64", "0.5", "2.0", "1.0", "1.0"}},
    {"gat", "squirrel", {"0.05", "1e-3", "0", "1e-5", "64", "0.5", "1.0", "1.2", "0.8"}},
    {"gat", "cornell", {"0.01", "0.05", "0.01", "0", "64", "0.5", "1.8", "1.0", "1.4"}},
    {"gat", "texas", {"1e-3", "0.05", "5e-4", "1e-4", "64", "0.5", "1.2", "0.6", "0.8"}},
    {"gat", "wisconsin", {"1e-3", "0.05", "1e-3", "1e-4", "64", "0.5", "2.6", "0.8", "1.4"}},
    {"gat", "ogbn-arxiv", {"0.01", "0.01", "0", "0", "256", "0", "1.4", "1.8", "1.0"}},
    {"gcnii", "cora", {"0.01", "0.01", "0.05", "1e-4", "64", "0.5", "0.8", "0.8", "1.0"}},
    {"gcnii", "citeseer", {"1e-4", "0.01", "1e-3", "5e-4", "64", "0.5", "2.0", "1.0", "1.2"}},
    {"gcnii", "pubmed", {"0.05", "0.05", "0.05", "0", "64", "0.5", "3.0", "1.0", "1.4"}},
    {"gcnii", "chameleon", {"0.01", "0.01", "1e-4", "1e-5", "64", "0.5", "0.6", "0.8", "1.0"}},
    {"gcnii", "actor", {"0.05", "0.01", "0.01", "1e-4", "64", "0.5", "1.6", "4.0", "1.4"}},
    {"gcnii", "squirrel", {"0.01", "0.01", "1e-5", "1e-5", "64", "0.5", "0.8", "1.0", "1.0"}},
    {"gcnii", "cornell", {"0.01", "0.05", "0.01", "0", "64", "0.5", "1.0", "1.2", "0.8"}},
    {"gcnii", "texas", {"0.01", "0.05", "1e-3", "1e-3", "64", "0.5", "1.6", "0.8", "1.2"}},
    {"gcnii", "wisconsin", {"0.01", "0.01", "5e-4", "5e-3", "64", "0.5", "1.0", "4.0", "1.6"}},
    {"gcnii", "ogbn-arxiv", {"0.01", "0.01", "0", "0", "256", "0", "1.0", "2.0", "1.0"}},
};

double cell_value(std::string_view cell) {
  // The printed "53-4" is read as 5e-4.
  if (cell == "53-4") return 5e-4;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw std::logic_error("unparsable preset cell '" + std::string(cell) + "'");
  }
  return v;
}

Preset make(const Row& row, bool full) {
  Preset p;
  p.dataset = row.dataset;
  p.name = std::string("enc-") + row.backbone + "-" + row.dataset + (full ? "-full" : "");
  p.table = full ? "fully-supervised" : "semi-supervised";
  p.split = full ? "geom" : "public";
  p.cells = row.cells;
  Hyperparams& hp = p.hp;
  hp.backbone = parse_backbone(row.backbone);
  hp.lr_gnn = cell_value(row.cells[0]);
  hp.lr_oc = cell_value(row.cells[1]);
  hp.wd_gnn = cell_value(row.cells[2]);
  hp.wd_oc = cell_value(row.cells[3]);
  hp.channels = static_cast<int>(cell_value(row.cells[4]));
  hp.dropout = cell_value(row.cells[5]);
  hp.alpha = cell_value(row.cells[6]);
  hp.beta = cell_value(row.cells[7]);
  hp.gamma = cell_value(row.cells[8]);
  return p;
}

const std::vector<Preset>& registry() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> out;
    for (const Row& r : kSemi) out.push_back(make(r, false));
    for (const Row& r : kFull) out.push_back(make(r, true));
    return out;
  }();
  return all;
}

}  // namespace

std::span<const Preset> presets() { return registry(); }

const Preset& find_preset(std::string_view name) {
  for (const Preset& p : registry()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const Preset& p : registry()) known += (known.empty() ? "" : ", ") + p.name;
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'; known presets: " + known);
}

std::string dump_preset(const Preset& p) {
  std::ostringstream out;
  out << p.name << " (" << p.table << ", split " << p.split << ")\n";
  for (std::size_t i = 0; i < kPresetColumns.size(); ++i) out << (i ? "\t" : "") << kPresetColumns[i];
  out << '\n';
  for (std::size_t i = 0; i < p.cells.size(); ++i) out << (i ? "\t" : "") << p.cells[i];
  out << '\n' << p.hp.to_kv();
  return out.str();
}

}  // namespace enc
