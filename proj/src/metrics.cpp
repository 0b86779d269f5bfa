#include "gsr/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace gsr {
namespace {

template <class F>
double masked_mean(const TargetImage& pred, const TargetImage& gt, F&& term) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw std::invalid_argument("metrics: image sizes differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (!pred.valid[p] || !gt.valid[p]) continue;
    sum += term(pred.data[p] - gt.data[p]);
    ++n;
  }
  if (n == 0) throw std::domain_error("no valid pixels");
  return sum / static_cast<double>(n);
}

}  // namespace

double masked_mse(const TargetImage& pred, const TargetImage& gt) {
  return masked_mean(pred, gt, [](double d) { return d * d; });
}

double masked_mae(const TargetImage& pred, const TargetImage& gt) {
  return masked_mean(pred, gt, [](double d) { return std::abs(d); });
}

}  // namespace gsr
