#include "cellprob/coords.hpp"

#include "cellprob/error.hpp"

namespace cellprob {

CoordSet CoordSet::select(const std::vector<std::size_t>& indices) const {
  CoordSet out;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(points[i]);
    if (!prob.empty()) out.prob.push_back(prob[i]);
    if (!value.empty()) out.value.push_back(value[i]);
  }
  return out;
}

CoordSet CoordSet::positives(double cut) const {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (prob.empty() || prob[i] >= cut) keep.push_back(i);
  return select(keep);
}

void CoordSet::validate() const {
  if (!prob.empty() && prob.size() != points.size())
    throw Error(ErrorCode::InvalidArgument, "probability column length differs from point count");
  if (!value.empty() && value.size() != points.size())
    throw Error(ErrorCode::InvalidArgument, "value column length differs from point count");
  for (double p : prob)
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "probabilities must lie in [0, 1]");
}

}  // namespace cellprob
