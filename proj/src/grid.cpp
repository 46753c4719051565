#include "fracrisk/grid.hpp"

#include "fracrisk/errors.hpp"

namespace fracrisk {

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 2) throw DomainError("grid must be 1D or 2D");
    size_ = 1;
    for (const auto& a : axes_) {
        if (a.cells == 0 || !(a.upper > a.lower)) throw DomainError("grid axis needs cells > 0 and upper > lower");
        size_ *= a.cells;
    }
}

std::size_t Grid::flat(const std::array<std::size_t, 2>& idx) const noexcept {
    if (axes_.size() == 1) return idx[0];
    return idx[0] * axes_[1].cells + idx[1];
}

std::array<std::size_t, 2> Grid::unflat(std::size_t flat_index) const noexcept {
    if (axes_.size() == 1) return {flat_index, 0};
    return {flat_index / axes_[1].cells, flat_index % axes_[1].cells};
}

std::array<double, 2> Grid::center(std::size_t flat_index) const noexcept {
    const auto idx = unflat(flat_index);
    std::array<double, 2> x{0.0, 0.0};
    for (std::size_t d = 0; d < axes_.size(); ++d) x[d] = axes_[d].center(idx[d]);
    return x;
}

}  // namespace fracrisk
