// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cassert>
#include <span>
#include <vector>

namespace ihrm {

// rows × cols cells of `width` values each, stored row-major. Rows and
// columns track clusters, so they are appended and erased as clusters come
// and go.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, int width, T fill = T{})
      : rows_(rows),
        cols_(cols),
        width_(width),
        data_(static_cast<size_t>(rows) * cols * width, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int width() const { return width_; }

  std::span<T> cell(int row, int col) {
    assert(row >= 0 && row < rows_ && col >= 0 && col < cols_);
    return {data_.data() + offset(row, col), static_cast<size_t>(width_)};
  }
  std::span<const T> cell(int row, int col) const {
    assert(row >= 0 && row < rows_ && col >= 0 && col < cols_);
    return {data_.data() + offset(row, col), static_cast<size_t>(width_)};
  }

  void append_row(T fill = T{}) {
    data_.resize(data_.size() + static_cast<size_t>(cols_) * width_, fill);
    ++rows_;
  }

  void append_col(T fill = T{}) {
    std::vector<T> next(static_cast<size_t>(rows_) * (cols_ + 1) * width_, fill);
    for (int r = 0; r < rows_; ++r) {
      std::copy(data_.begin() + offset(r, 0),
                data_.begin() + offset(r, 0) + static_cast<size_t>(cols_) * width_,
                next.begin() + static_cast<size_t>(r) * (cols_ + 1) * width_);
    }
    data_ = std::move(next);
    ++cols_;
  }

  void erase_row(int row) {
    data_.erase(data_.begin() + offset(row, 0),
                data_.begin() + offset(row + 1, 0));
    --rows_;
  }

  void erase_col(int col) {
    std::vector<T> next;
    next.reserve(static_cast<size_t>(rows_) * (cols_ - 1) * width_);
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        if (c == col) continue;
        auto source = cell(r, c);
        next.insert(next.end(), source.begin(), source.end());
      }
    }
    data_ = std::move(next);
    --cols_;
  }

  bool operator==(const Grid&) const = default;

 private:
  size_t offset(int row, int col) const {
    return (static_cast<size_t>(row) * cols_ + col) * width_;
  }

  int rows_ = 0;
  int cols_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

}  // namespace ihrm
