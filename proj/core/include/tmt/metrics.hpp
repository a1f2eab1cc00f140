#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tmt {

/// K×K pixel counts; rows are ground truth, columns prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {}
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts);

  std::size_t classes() const { return k_; }
  std::uint64_t operator()(std::size_t truth, std::size_t pred) const {
    return counts_[truth * k_ + pred];
  }
  std::uint64_t total() const;

  void add(std::size_t truth, std::size_t pred, std::uint64_t n = 1);
  void add(std::span<const int> truth, std::span<const int> pred);
  void merge(const ConfusionMatrix& other);

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

/// IoU per class; negative for classes absent from both truth and prediction.
std::vector<double> per_class_iou(const ConfusionMatrix& cm);

/// Mean IoU over classes present in truth or prediction. Throws InputError on an empty matrix.
double miou(const ConfusionMatrix& cm);
/// Mean per-class recall over classes present in truth. Throws InputError on an empty matrix.
double macc(const ConfusionMatrix& cm);

/// Area under the ROC curve of `scores` against binary `positive` labels
/// (Mann-Whitney, ties count half). Throws InputError if either class is missing.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

double median(std::vector<double> values);

}  // namespace tmt
