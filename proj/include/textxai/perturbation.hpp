#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "textxai/model.hpp"

namespace textxai {

enum class ReplacementMode { zeros, dataset_mean };

std::string_view to_string(ReplacementMode mode);
ReplacementMode replacement_from_string(std::string_view s);

/// How dropped fragments are filled. `mean` is the column-wise mean vector
/// used by dataset_mean and must have one entry per feature column.
struct Replacement {
  ReplacementMode mode = ReplacementMode::zeros;
  std::vector<double> mean;

  static Replacement zeros() { return {}; }
  static Replacement dataset_mean(std::vector<double> mean) { return {ReplacementMode::dataset_mean, std::move(mean)}; }
};

/// Column-wise mean over the rows of one or more feature matrices.
std::vector<double> column_mean(std::span<const Matrix* const> matrices);

/// Copy of `features` with the rows of every dropped fragment replaced.
/// Kept rows are bit-identical to the input.
Matrix apply_replacement(const Matrix& features, const std::vector<Fragment>& fragments,
                         const PerturbationMask& mask, const Replacement& replacement);

/// Same as above with an explicit drop list (used for top-k masking, where
/// dropping nothing or everything is legal).
Matrix replace_fragments(const Matrix& features, const std::vector<Fragment>& fragments,
                         const std::vector<std::size_t>& dropped, const Replacement& replacement);

}  // namespace textxai
