#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace pgm {

struct Offset {
    int dx = 0;
    int dy = 0;
    bool operator==(const Offset&) const = default;
};

/// Integer correspondence field; each entry is an offset or `uninitialized`.
class CorrespondenceField {
public:
    CorrespondenceField() = default;
    /// All entries uninitialized.
    CorrespondenceField(int width, int height);
    /// All entries set to `fill`.
    CorrespondenceField(int width, int height, Offset fill);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    bool initialized(int x, int y) const noexcept { return valid_[index(x, y)] != 0; }
    /// Only meaningful when `initialized(x, y)`.
    Offset offset(int x, int y) const noexcept { return offsets_[index(x, y)]; }
    std::optional<Offset> get(int x, int y) const noexcept {
        if (!initialized(x, y)) return std::nullopt;
        return offset(x, y);
    }

    void set(int x, int y, Offset o) noexcept {
        offsets_[index(x, y)] = o;
        valid_[index(x, y)] = 1;
    }
    void clear(int x, int y) noexcept {
        offsets_[index(x, y)] = Offset{};
        valid_[index(x, y)] = 0;
    }

    std::size_t initialized_count() const noexcept;

    bool operator==(const CorrespondenceField&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<Offset> offsets_;
    std::vector<std::uint8_t> valid_;
};

enum class OutlierState : std::uint8_t { Unset, Inlier, Outlier };

/// Per-pixel outlier history for one pyramid level.
class OutlierRecord {
public:
    OutlierRecord() = default;
    OutlierRecord(int width, int height, OutlierState fill = OutlierState::Unset);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    OutlierState at(int x, int y) const noexcept { return states_[index(x, y)]; }
    void set(int x, int y, OutlierState s) noexcept { states_[index(x, y)] = s; }
    /// Unset entries count as inliers.
    bool is_inlier(int x, int y) const noexcept { return at(x, y) != OutlierState::Outlier; }
    std::size_t count(OutlierState s) const noexcept;

    bool operator==(const OutlierRecord&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<OutlierState> states_;
};

/// Pass/fail result of a forward-backward check.
class ConsistencyMap {
public:
    ConsistencyMap() = default;
    ConsistencyMap(int width, int height, bool fill = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool passed(int x, int y) const noexcept { return pass_[index(x, y)] != 0; }
    void set(int x, int y, bool pass) noexcept { pass_[index(x, y)] = pass ? 1 : 0; }
    std::size_t pass_count() const noexcept;

    bool operator==(const ConsistencyMap&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pass_;
};

struct FlowVector {
    float u = 0.0f;
    float v = 0.0f;
    bool operator==(const FlowVector&) const = default;
};

/// Dense real-valued motion field.
class FlowField {
public:
    FlowField() = default;
    FlowField(int width, int height, FlowVector fill = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    FlowVector& at(int x, int y) noexcept { return data_[index(x, y)]; }
    const FlowVector& at(int x, int y) const noexcept { return data_[index(x, y)]; }
    const std::vector<FlowVector>& data() const noexcept { return data_; }
    std::vector<FlowVector>& data() noexcept { return data_; }

    bool operator==(const FlowField&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<FlowVector> data_;
};

/// Per-pixel validity (e.g. ground-truth availability).
struct ValidityMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> valid;

    ValidityMask() = default;
    ValidityMask(int w, int h, bool fill) : width(w), height(h), valid(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}
    bool at(int x, int y) const noexcept { return valid[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) noexcept { valid[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count() const noexcept;
};

}  // namespace pgm
