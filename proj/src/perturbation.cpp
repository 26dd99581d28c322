#include "textxai/perturbation.hpp"

#include <algorithm>

namespace textxai {

std::string_view to_string(ReplacementMode mode) {
  return mode == ReplacementMode::zeros ? "zeros" : "dataset_mean";
}

ReplacementMode replacement_from_string(std::string_view s) {
  if (s == "zeros") return ReplacementMode::zeros;
  if (s == "dataset_mean") return ReplacementMode::dataset_mean;
  throw Error(ErrorKind::config_error, "unknown replacement mode '" + std::string(s) + "'");
}

std::vector<double> column_mean(std::span<const Matrix* const> matrices) {
  if (matrices.empty()) throw Error(ErrorKind::invalid_input, "column_mean needs at least one matrix");
  const std::size_t d = matrices.front()->cols();
  std::vector<double> sum(d, 0.0);
  std::size_t rows = 0;
  for (const Matrix* m : matrices) {
    if (m->cols() != d) throw Error(ErrorKind::invalid_input, "column_mean: feature dimensions differ");
    for (std::size_t r = 0; r < m->rows(); ++r) {
      const auto row = m->row(r);
      for (std::size_t c = 0; c < d; ++c) sum[c] += row[c];
    }
    rows += m->rows();
  }
  if (rows == 0) throw Error(ErrorKind::invalid_input, "column_mean over zero rows");
  for (double& s : sum) s /= static_cast<double>(rows);
  return sum;
}

namespace {

void fill_fragment(Matrix& out, const Fragment& fr, const Replacement& replacement) {
  for (std::size_t r = fr.start; r < fr.end; ++r) {
    auto row = out.row(r);
    if (replacement.mode == ReplacementMode::zeros) {
      std::fill(row.begin(), row.end(), 0.0);
    } else {
      std::copy(replacement.mean.begin(), replacement.mean.end(), row.begin());
    }
  }
}

void check_replacement(const Matrix& features, const Replacement& replacement) {
  if (replacement.mode == ReplacementMode::dataset_mean && replacement.mean.size() != features.cols()) {
    throw Error(ErrorKind::invalid_input, "dataset_mean replacement needs a mean vector of length " +
                                              std::to_string(features.cols()));
  }
}

}  // namespace

Matrix apply_replacement(const Matrix& features, const std::vector<Fragment>& fragments,
                         const PerturbationMask& mask, const Replacement& replacement) {
  if (mask.size() != fragments.size()) {
    throw Error(ErrorKind::invalid_input, "mask length " + std::to_string(mask.size()) + " != fragment count " +
                                              std::to_string(fragments.size()));
  }
  std::vector<std::size_t> dropped;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) dropped.push_back(i);
  }
  return replace_fragments(features, fragments, dropped, replacement);
}

Matrix replace_fragments(const Matrix& features, const std::vector<Fragment>& fragments,
                         const std::vector<std::size_t>& dropped, const Replacement& replacement) {
  check_replacement(features, replacement);
  Matrix out = features;
  for (std::size_t idx : dropped) {
    if (idx >= fragments.size()) throw Error(ErrorKind::out_of_range, "fragment index " + std::to_string(idx) + " out of range");
    if (fragments[idx].end > features.rows()) throw Error(ErrorKind::invalid_input, "fragment boundary beyond feature rows");
    fill_fragment(out, fragments[idx], replacement);
  }
  return out;
}

}  // namespace textxai
