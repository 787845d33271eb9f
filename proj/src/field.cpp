#include "pgm/field.hpp"

#include "pgm/errors.hpp"

#include <algorithm>

namespace pgm {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1) throw InvalidInput("field dimensions must be positive");
}

std::size_t area(int width, int height) {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

CorrespondenceField::CorrespondenceField(int width, int height)
    : width_(width), height_(height) {
    check_dims(width, height);
    offsets_.assign(area(width, height), Offset{});
    valid_.assign(area(width, height), 0);
}

CorrespondenceField::CorrespondenceField(int width, int height, Offset fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    offsets_.assign(area(width, height), fill);
    valid_.assign(area(width, height), 1);
}

std::size_t CorrespondenceField::initialized_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

OutlierRecord::OutlierRecord(int width, int height, OutlierState fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    states_.assign(area(width, height), fill);
}

std::size_t OutlierRecord::count(OutlierState s) const noexcept {
    return static_cast<std::size_t>(std::count(states_.begin(), states_.end(), s));
}

ConsistencyMap::ConsistencyMap(int width, int height, bool fill) : width_(width), height_(height) {
    check_dims(width, height);
    pass_.assign(area(width, height), fill ? 1 : 0);
}

std::size_t ConsistencyMap::pass_count() const noexcept {
    return static_cast<std::size_t>(std::count(pass_.begin(), pass_.end(), std::uint8_t{1}));
}

FlowField::FlowField(int width, int height, FlowVector fill) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(area(width, height), fill);
}

std::size_t ValidityMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

}  // namespace pgm
