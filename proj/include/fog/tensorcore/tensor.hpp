#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fog/tensorcore/errors.hpp"

namespace fog {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_to_string(const Shape& shape);

/// Dense row-major array. Rank 1 and rank 2 cover everything the layers need;
/// higher ranks are stored but only addressed through the flat view.
///
/// Zero extents are allowed so that an edge tensor of a graph without edges
/// (E = 0) is an ordinary value.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_size(shape_)) {
            throw DimensionError("tensor data has " + std::to_string(data_.size()) +
                                 " elements but shape " + shape_to_string(shape_) + " needs " +
                                 std::to_string(shape_size(shape_)));
        }
    }

    static Tensor vector(std::initializer_list<T> values) {
        return Tensor({values.size()}, std::vector<T>(values));
    }

    static Tensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        std::vector<T> data;
        data.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionError("ragged matrix literal");
            data.insert(data.end(), row.begin(), row.end());
        }
        return Tensor({r, c}, std::move(data));
    }

    static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    /// Extent of the leading axis (1 for scalars).
    std::size_t rows() const noexcept { return shape_.empty() ? 1 : shape_.front(); }

    /// Number of elements per leading-axis row.
    std::size_t row_width() const noexcept {
        if (shape_.empty()) return 1;
        std::size_t w = 1;
        for (std::size_t i = 1; i < shape_.size(); ++i) w *= shape_[i];
        return w;
    }

    /// Extent of the trailing (channel) axis.
    std::size_t channels() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * row_width() + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept {
        return data_[r * row_width() + c];
    }

    std::span<T> row(std::size_t r) noexcept {
        const std::size_t w = row_width();
        return std::span<T>(data_).subspan(r * w, w);
    }
    std::span<const T> row(std::size_t r) const noexcept {
        const std::size_t w = row_width();
        return std::span<const T>(data_).subspan(r * w, w);
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    Tensor reshaped(Shape shape) const {
        if (shape_size(shape) != size()) {
            throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " +
                                 shape_to_string(shape));
        }
        return Tensor(std::move(shape), data_);
    }

    template <typename U>
    Tensor<U> cast() const {
        return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_{0};
    std::vector<T> data_;
};

}  // namespace fog
