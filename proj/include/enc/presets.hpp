#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "enc/train.hpp"

namespace enc {

/// A row of the published hyperparameter tables.
struct Preset {
  std::string name;       // enc-<backbone>-<dataset>, "-full" for fully supervised rows
  std::string_view table; // "semi-supervised" or "fully-supervised"
  std::string dataset;
  std::string split;      // default split: "public" or "geom"
  /// Cells as printed: LR_GNN, LR_oc, WD_GNN, WD_oc, c, p, alpha, beta, gamma.
  std::array<std::string_view, 9> cells;
  Hyperparams hp;
};

inline constexpr std::array<std::string_view, 9> kPresetColumns = {
    "LR_GNN", "LR_oc", "WD_GNN", "WD_oc", "c", "p", "alpha", "beta", "gamma"};

std::span<const Preset> presets();

/// Throws std::invalid_argument (listing the known names) when absent.
const Preset& find_preset(std::string_view name);

/// Header line, the verbatim row and the parsed hyperparameters.
std::string dump_preset(const Preset& p);

}  // namespace enc
