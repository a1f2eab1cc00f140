#include "tmt/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "tmt/errors.hpp"

namespace tmt {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
    : k_(classes), counts_(std::move(counts)) {
  if (counts_.size() != k_ * k_) throw ShapeError("confusion matrix counts must be K*K");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(std::size_t truth, std::size_t pred, std::uint64_t n) {
  if (truth >= k_ || pred >= k_) throw InputError("class index out of range");
  counts_[truth * k_ + pred] += n;
}

void ConfusionMatrix::add(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw ShapeError("truth and prediction sizes differ");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || pred[i] < 0) throw InputError("negative class index");
    add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(pred[i]));
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw ShapeError("confusion matrices have different class counts");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::vector<double> per_class_iou(const ConfusionMatrix& cm) {
  const std::size_t k = cm.classes();
  std::vector<double> iou(k, -1.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t o = 0; o < k; ++o) {
      row += cm(c, o);
      col += cm(o, c);
    }
    const std::uint64_t tp = cm(c, c);
    const std::uint64_t uni = row + col - tp;
    if (uni > 0) iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
  }
  return iou;
}

double miou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InputError("confusion matrix is empty");
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : per_class_iou(cm)) {
    if (v < 0.0) continue;
    sum += v;
    ++n;
  }
  return sum / static_cast<double>(n);
}

double macc(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InputError("confusion matrix is empty");
  const std::size_t k = cm.classes();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t row = 0;
    for (std::size_t o = 0; o < k; ++o) row += cm(c, o);
    if (row == 0) continue;
    sum += static_cast<double>(cm(c, c)) / static_cast<double>(row);
    ++n;
  }
  return sum / static_cast<double>(n);
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) throw ShapeError("scores and labels differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tied groups.
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = avg;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (positive[i]) {
      pos_rank_sum += rank[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InputError("AUC needs both positive and negative samples");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace tmt
