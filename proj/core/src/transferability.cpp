#include "tmt/transferability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "tmt/adamw.hpp"
#include "tmt/errors.hpp"
#include "tmt/rng.hpp"

namespace tmt {

namespace {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> held_out;
};

Split split_indices(std::size_t n, double held_out_fraction, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  auto n_held = static_cast<std::size_t>(std::round(held_out_fraction * static_cast<double>(n)));
  if (n >= 2) n_held = std::clamp<std::size_t>(n_held, 1, n - 1);
  else n_held = 0;
  Split s;
  s.held_out.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_held));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_held), idx.end());
  return s;
}

void check_regions(const std::vector<std::vector<double>>& regions, const char* name,
                   std::size_t width) {
  if (regions.empty()) throw InputError(std::string(name) + " region set is empty");
  for (const auto& r : regions) {
    if (r.size() != width) throw InputError("region features have inconsistent widths");
    for (double v : r) {
      if (!std::isfinite(v)) throw InputError("region feature is not finite");
    }
  }
}

}  // namespace

TrainedDiscriminator train_discriminator(const std::vector<std::vector<double>>& source_regions,
                                         const std::vector<std::vector<double>>& target_regions,
                                         const DiscriminatorConfig& config) {
  if (source_regions.empty()) throw InputError("source region set is empty");
  const std::size_t width = source_regions.front().size();
  check_regions(source_regions, "source", width);
  check_regions(target_regions, "target", width);
  if (config.batch_size < 2) throw ConfigError("discriminator batch size must be at least 2");

  Rng split_rng(config.seed, {0xd15c, 1});
  Split src = split_indices(source_regions.size(), config.held_out_fraction, split_rng);
  Split tgt = split_indices(target_regions.size(), config.held_out_fraction, split_rng);
  // Degenerate single-sample domains train on the one sample they have.
  if (src.train.empty()) src.train = src.held_out;
  if (tgt.train.empty()) tgt.train = tgt.held_out;

  TrainedDiscriminator out;
  for (std::size_t i : src.held_out) out.held_out.push_back({source_regions[i], 1});
  for (std::size_t i : tgt.held_out) out.held_out.push_back({target_regions[i], 0});

  std::vector<std::size_t> dims{width};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(1);
  Rng init_rng(config.seed, {0xd15c, 2});
  out.params = make_mlp(dims, init_rng);

  AdamWState opt({.lr = config.lr, .weight_decay = config.weight_decay},
                 std::as_const(out.params).refs());
  Rng batch_rng(config.seed, {0xd15c, 3});

  const std::size_t half = config.batch_size / 2;
  const std::size_t per_epoch = std::max<std::size_t>(
      1, (2 * std::max(src.train.size(), tgt.train.size()) + config.batch_size - 1) /
             config.batch_size);

  Matrix batch(2 * half, width);
  std::vector<int> labels(2 * half);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < per_epoch; ++step) {
      for (std::size_t b = 0; b < half; ++b) {
        const auto& s = source_regions[src.train[batch_rng.index(src.train.size())]];
        std::copy(s.begin(), s.end(), batch.row(2 * b).begin());
        labels[2 * b] = 1;
        const auto& t = target_regions[tgt.train[batch_rng.index(tgt.train.size())]];
        std::copy(t.begin(), t.end(), batch.row(2 * b + 1).begin());
        labels[2 * b + 1] = 0;
      }
      MlpGradient g = mlp_batch_gradient(out.params, batch, labels);
      loss_sum += g.loss;
      adamw_step(opt, out.params.refs(), std::as_const(g.grads).refs());
    }
    EpochLog entry;
    entry.loss = loss_sum / static_cast<double>(per_epoch);
    entry.held_out_accuracy =
        out.held_out.empty() ? 0.0 : balanced_accuracy(out.params, out.held_out);
    out.log.push_back(entry);
  }
  out.provenance = "discriminator(seed=" + std::to_string(config.seed) +
                   ",epochs=" + std::to_string(config.epochs) + ")";
  return out;
}

double balanced_accuracy(const MlpParams& params, const std::vector<DomainSample>& samples) {
  std::size_t n[2] = {0, 0};
  std::size_t correct[2] = {0, 0};
  for (const auto& s : samples) {
    const int pred = mlp_forward(params, s.feature) > 0.5 ? 1 : 0;
    ++n[s.label];
    if (pred == s.label) ++correct[s.label];
  }
  double acc = 0.0;
  int domains = 0;
  for (int d = 0; d < 2; ++d) {
    if (n[d] == 0) continue;
    acc += static_cast<double>(correct[d]) / static_cast<double>(n[d]);
    ++domains;
  }
  return domains == 0 ? 0.0 : acc / domains;
}

double transferability_from_probability(double prob) {
  return std::clamp(2.0 * std::min(prob, 1.0 - prob), 0.0, 1.0);
}

double region_transferability(const MlpParams& params, std::span<const double> region_feature) {
  return transferability_from_probability(mlp_forward(params, region_feature));
}

TransferabilityMap build_transferability_map(const MlpParams& params, const ClusterState& state,
                                             std::string provenance) {
  TransferabilityMap map;
  map.height = state.height;
  map.width = state.width;
  map.provenance = std::move(provenance);
  const std::size_t np = state.regions();
  map.region_scores.assign(np, 0.0);
  map.region_empty.assign(np, true);
  for (std::size_t label : state.labels) map.region_empty[label] = false;
  for (std::size_t i = 0; i < np; ++i) {
    map.region_scores[i] = region_transferability(params, state.centers.row(i));
  }
  map.pixel_scores.resize(state.labels.size());
  for (std::size_t j = 0; j < state.labels.size(); ++j) {
    map.pixel_scores[j] = map.region_scores[state.labels[j]];
  }
  return map;
}

PadEstimate pad_from_error(double epsilon) {
  PadEstimate p;
  p.epsilon = epsilon;
  p.distance = std::clamp(2.0 * (1.0 - 2.0 * epsilon), -2.0, 2.0);
  return p;
}

PadEstimate compute_pad(const MlpParams& params, const std::vector<DomainSample>& held_out) {
  bool seen[2] = {false, false};
  for (const auto& s : held_out) {
    if (s.label != 0 && s.label != 1) throw InputError("domain label must be 0 or 1");
    seen[s.label] = true;
  }
  if (!seen[0] || !seen[1]) throw InputError("held-out set must contain both domains");
  return pad_from_error(1.0 - balanced_accuracy(params, held_out));
}

std::vector<std::vector<double>> region_features(const ClusterState& state) {
  std::vector<bool> used(state.regions(), false);
  for (std::size_t l : state.labels) used[l] = true;
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < state.regions(); ++i) {
    if (!used[i]) continue;
    auto r = state.centers.row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

}  // namespace tmt
