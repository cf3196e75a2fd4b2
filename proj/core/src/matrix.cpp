#include "cellprob/matrix.hpp"

#include <algorithm>

#include "cellprob/error.hpp"

namespace cellprob {

void FeatureMatrix::append_rows(const FeatureMatrix& other) {
  if (rows_ == 0 && cols_ == 0) {
    *this = other;
    return;
  }
  if (other.rows_ == 0) return;
  if (other.cols_ != cols_) throw Error(ErrorCode::DimensionMismatch, "cannot append rows with a different width");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  FeatureMatrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(row(rows[i]).begin(), cols_, out.row(i).begin());
  return out;
}

}  // namespace cellprob
