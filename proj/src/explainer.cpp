#include "textxai/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "textxai/faithfulness.hpp"
#include "textxai/parallel.hpp"

namespace textxai {

void ExplainerConfig::validate() const {
  if (M < 1) throw Error(ErrorKind::config_error, "M must be >= 1");
  if (!(keep_probability > 0.0 && keep_probability < 1.0)) {
    throw Error(ErrorKind::config_error, "keep_probability must lie in (0, 1)");
  }
  if (!(kernel_sigma > 0.0)) throw Error(ErrorKind::config_error, "kernel_sigma must be > 0");
  if (!(ridge_lambda >= 0.0)) throw Error(ErrorKind::config_error, "ridge_lambda must be >= 0");
}

void to_json(nlohmann::json& j, const ExplainerConfig& c) {
  j = nlohmann::json{{"M", c.M},
                     {"keep_probability", c.keep_probability},
                     {"kernel_sigma", c.kernel_sigma},
                     {"ridge_lambda", c.ridge_lambda},
                     {"replacement", to_string(c.replacement)},
                     {"seed", c.seed},
                     {"mask_scheme", c.mask_scheme == MaskScheme::sampled ? "sampled" : "exhaustive"}};
}

void from_json(const nlohmann::json& j, ExplainerConfig& c) {
  c = ExplainerConfig{};
  if (j.contains("M")) j.at("M").get_to(c.M);
  if (j.contains("keep_probability")) j.at("keep_probability").get_to(c.keep_probability);
  if (j.contains("kernel_sigma")) j.at("kernel_sigma").get_to(c.kernel_sigma);
  if (j.contains("ridge_lambda")) j.at("ridge_lambda").get_to(c.ridge_lambda);
  if (j.contains("replacement")) c.replacement = replacement_from_string(j.at("replacement").get<std::string>());
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("mask_scheme")) {
    const auto s = j.at("mask_scheme").get<std::string>();
    if (s == "sampled") {
      c.mask_scheme = MaskScheme::sampled;
    } else if (s == "exhaustive") {
      c.mask_scheme = MaskScheme::exhaustive;
    } else {
      throw Error(ErrorKind::config_error, "unknown mask_scheme '" + s + "'");
    }
  }
  c.validate();
}

std::vector<PerturbationMask> sample_masks(std::size_t fragment_count, const ExplainerConfig& config) {
  if (fragment_count < 2) throw Error(ErrorKind::invalid_input, "perturbation needs at least two fragments");
  config.validate();
  std::mt19937_64 rng(config.seed);
  // Raw 53-bit draws rather than std::bernoulli_distribution, whose output
  // is implementation-defined.
  auto coin = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 < config.keep_probability; };

  std::vector<PerturbationMask> masks;
  masks.reserve(config.M);
  std::vector<bool> kept(fragment_count);
  while (masks.size() < config.M) {
    std::size_t n_kept = 0;
    for (std::size_t i = 0; i < fragment_count; ++i) {
      kept[i] = coin();
      n_kept += kept[i];
    }
    if (n_kept == 0 || n_kept == fragment_count) continue;
    masks.emplace_back(kept);
  }
  return masks;
}

std::vector<PerturbationMask> enumerate_masks(std::size_t fragment_count) {
  if (fragment_count < 2) throw Error(ErrorKind::invalid_input, "perturbation needs at least two fragments");
  if (fragment_count > 24) throw Error(ErrorKind::invalid_input, "exhaustive masks limited to 24 fragments");
  const std::uint64_t total = std::uint64_t{1} << fragment_count;
  std::vector<PerturbationMask> masks;
  masks.reserve(total - 2);
  for (std::uint64_t bits = 1; bits + 1 < total; ++bits) {
    std::vector<bool> kept(fragment_count);
    for (std::size_t i = 0; i < fragment_count; ++i) kept[i] = (bits >> i) & 1U;
    masks.emplace_back(std::move(kept));
  }
  return masks;
}

double mask_weight(const PerturbationMask& mask, double kernel_sigma) {
  const double distance = 1.0 - static_cast<double>(mask.kept_count()) / static_cast<double>(mask.size());
  return std::exp(-(distance * distance) / (kernel_sigma * kernel_sigma));
}

double rank_fidelity(std::span<const double> y, std::span<const double> y_hat) {
  if (std::equal(y.begin(), y.end(), y_hat.begin(), y_hat.end())) return 1.0;
  const TauResult tau = kendall_tau(y, y_hat);
  return tau.degenerate ? 0.0 : tau.value;
}

SurrogateFit fit_surrogate(std::span<const PerturbationMask> masks, std::span<const double> targets,
                           const ExplainerConfig& config) {
  if (masks.empty() || masks.size() != targets.size()) {
    throw Error(ErrorKind::invalid_input, "surrogate fit needs one target per mask");
  }
  const std::size_t f = masks.front().size();
  const std::size_t m = masks.size();

  std::vector<double> w(m);
  double w_sum = 0.0;
  double t_mean = 0.0;
  Eigen::VectorXd z_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f));
  for (std::size_t s = 0; s < m; ++s) {
    if (masks[s].size() != f) throw Error(ErrorKind::invalid_input, "masks have differing lengths");
    w[s] = mask_weight(masks[s], config.kernel_sigma);
    w_sum += w[s];
    t_mean += w[s] * targets[s];
    for (std::size_t c = 0; c < f; ++c) {
      if (masks[s][c]) z_mean[static_cast<Eigen::Index>(c)] += w[s];
    }
  }
  t_mean /= w_sum;
  z_mean /= w_sum;

  const auto fi = static_cast<Eigen::Index>(f);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(fi, fi);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(fi);
  Eigen::VectorXd zc(fi);
  for (std::size_t s = 0; s < m; ++s) {
    for (Eigen::Index c = 0; c < fi; ++c) zc[c] = (masks[s][static_cast<std::size_t>(c)] ? 1.0 : 0.0) - z_mean[c];
    gram.selfadjointView<Eigen::Lower>().rankUpdate(zc, w[s]);
    rhs += (w[s] * (targets[s] - t_mean)) * zc;
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  SurrogateFit fit;
  auto solve = [&](double lambda) -> std::optional<Eigen::VectorXd> {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) return std::nullopt;
    return llt.solve(rhs);
  };

  auto coef = solve(config.ridge_lambda);
  if (!coef) {
    fit.ridge_fallback = true;
    coef = solve(std::max(config.ridge_lambda, kRidgeFloor));
    if (!coef) throw Error(ErrorKind::invalid_input, "surrogate normal equations are singular even with ridge floor");
  }
  fit.coefficients.assign(coef->data(), coef->data() + coef->size());
  fit.intercept = t_mean - z_mean.dot(*coef);
  return fit;
}

ExplanationScores explain_lime_on_masks(const SummarizerBackend& backend, const FeatureBundle& bundle,
                                        std::span<const PerturbationMask> masks, const ExplainerConfig& config,
                                        const Replacement& replacement,
                                        const std::optional<ImportanceScores>& original) {
  config.validate();
  if (bundle.fragment_count() < 2) throw Error(ErrorKind::invalid_input, "LIME needs at least two fragments");
  if (replacement.mode != config.replacement) {
    throw Error(ErrorKind::invalid_input, "replacement does not match the explainer configuration");
  }
  const ImportanceScores y = original ? *original : score_frames(backend, bundle.features(), bundle.video_id());

  std::vector<double> fidelity(masks.size());
  parallel_for(masks.size(), backend.max_concurrency(), [&](std::size_t s) {
    const Matrix perturbed = apply_replacement(bundle.features(), bundle.fragments(), masks[s], replacement);
    const auto y_hat = score_frames(backend, perturbed, bundle.video_id());
    fidelity[s] = rank_fidelity(y.scores, y_hat.scores);
  });

  const SurrogateFit fit = fit_surrogate(masks, fidelity, config);
  ExplanationScores scores(ExplainerId::lime, fit.coefficients);
  scores.ridge_fallback = fit.ridge_fallback;
  return scores;
}

ExplanationScores explain_lime(const SummarizerBackend& backend, const FeatureBundle& bundle,
                               const ExplainerConfig& config, const Replacement& replacement,
                               const std::optional<ImportanceScores>& original) {
  const auto masks = config.mask_scheme == MaskScheme::exhaustive ? enumerate_masks(bundle.fragment_count())
                                                                  : sample_masks(bundle.fragment_count(), config);
  return explain_lime_on_masks(backend, bundle, masks, config, replacement, original);
}

ExplanationScores explain_attention(const SummarizerBackend& backend, const FeatureBundle& bundle) {
  const auto att = attention_signal(backend, bundle.features());
  std::vector<double> per_fragment;
  per_fragment.reserve(bundle.fragment_count());
  for (const auto& fr : bundle.fragments()) {
    double sum = 0.0;
    for (std::size_t r = fr.start; r < fr.end; ++r) sum += att[r];
    per_fragment.push_back(sum / static_cast<double>(fr.size()));
  }
  return ExplanationScores(ExplainerId::attention, std::move(per_fragment));
}

ExplanationScores explain_random(std::size_t fragment_count, std::uint64_t seed) {
  if (fragment_count == 0) throw Error(ErrorKind::invalid_input, "no fragments");
  std::mt19937_64 rng(seed ^ 0x72616e646f6dULL);
  std::vector<double> v(fragment_count);
  for (double& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return ExplanationScores(ExplainerId::random, std::move(v));
}

std::vector<std::size_t> top_k_fragments(const ExplanationScores& scores, std::size_t k) { return scores.top_k(k); }

}  // namespace textxai
