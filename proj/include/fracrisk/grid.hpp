#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace fracrisk {

/// One uniformly divided coordinate range.
struct Axis {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t cells = 1;

    double width() const noexcept { return (upper - lower) / static_cast<double>(cells); }
    double center(std::size_t i) const noexcept {
        return lower + (static_cast<double>(i) + 0.5) * width();
    }
};

/// Cell-centred tensor grid in 1 or 2 dimensions. Cells are ordered
/// row-major with the last coordinate fastest.
class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<Axis> axes);

    int dim() const noexcept { return static_cast<int>(axes_.size()); }
    const Axis& axis(int d) const { return axes_.at(static_cast<std::size_t>(d)); }
    const std::vector<Axis>& axes() const noexcept { return axes_; }
    std::size_t size() const noexcept { return size_; }

    std::size_t flat(const std::array<std::size_t, 2>& idx) const noexcept;
    std::array<std::size_t, 2> unflat(std::size_t flat_index) const noexcept;
    std::array<double, 2> center(std::size_t flat_index) const noexcept;

private:
    std::vector<Axis> axes_;
    std::size_t size_ = 0;
};

}  // namespace fracrisk
