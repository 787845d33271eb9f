#include "pgm/interp.hpp"

#include "pgm/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace pgm {

namespace {

/// Uniform bucket grid over match source positions; exact k-nearest queries by ring expansion.
class BucketIndex {
public:
    BucketIndex(const MatchSet& matches, int width, int height) : matches_(&matches) {
        const double area = static_cast<double>(width) * height;
        cell_ = std::max(1, static_cast<int>(std::ceil(std::sqrt(area / std::max<std::size_t>(1, matches.size())) * 2.0)));
        cols_ = (width + cell_ - 1) / cell_;
        rows_ = (height + cell_ - 1) / cell_;
        buckets_.resize(static_cast<std::size_t>(cols_) * rows_);
        for (std::size_t i = 0; i < matches.size(); ++i) {
            const Match& m = matches[i];
            buckets_[bucket(std::clamp(m.x1 / cell_, 0, cols_ - 1), std::clamp(m.y1 / cell_, 0, rows_ - 1))]
                .push_back(static_cast<int>(i));
        }
    }

    struct Neighbour {
        double dist2;
        int index;
        bool operator<(const Neighbour& o) const {
            return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
        }
    };

    void query(int x, int y, int k, std::vector<Neighbour>& out) const {
        out.clear();
        const int cx = std::clamp(x / cell_, 0, cols_ - 1);
        const int cy = std::clamp(y / cell_, 0, rows_ - 1);
        const int max_ring = std::max(cols_, rows_);
        const std::size_t want = std::min(static_cast<std::size_t>(k), matches_->size());
        for (int ring = 0; ring <= max_ring; ++ring) {
            for (int by = cy - ring; by <= cy + ring; ++by) {
                if (by < 0 || by >= rows_) continue;
                for (int bx = cx - ring; bx <= cx + ring; ++bx) {
                    if (bx < 0 || bx >= cols_) continue;
                    if (std::max(std::abs(bx - cx), std::abs(by - cy)) != ring) continue;
                    for (int i : buckets_[bucket(bx, by)]) {
                        const Match& m = (*matches_)[static_cast<std::size_t>(i)];
                        const double dx = m.x1 - x;
                        const double dy = m.y1 - y;
                        out.push_back({dx * dx + dy * dy, i});
                    }
                }
            }
            if (out.size() >= want) {
                std::nth_element(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(want - 1), out.end());
                const double reach = static_cast<double>(ring) * cell_;
                if (out[want - 1].dist2 <= reach * reach || ring == max_ring) break;
            }
        }
        std::sort(out.begin(), out.end());
        out.resize(want);
    }

private:
    std::size_t bucket(int bx, int by) const { return static_cast<std::size_t>(by) * cols_ + bx; }

    const MatchSet* matches_;
    int cell_ = 1;
    int cols_ = 1;
    int rows_ = 1;
    std::vector<std::vector<int>> buckets_;
};

FlowVector displacement(const Match& m) {
    return {static_cast<float>(m.x2 - m.x1), static_cast<float>(m.y2 - m.y1)};
}

std::vector<double> gaussian_weights(const std::vector<BucketIndex::Neighbour>& nb) {
    std::vector<double> dist(nb.size());
    for (std::size_t i = 0; i < nb.size(); ++i) dist[i] = std::sqrt(nb[i].dist2);
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    double sigma = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    if (!(sigma > 0.0)) sigma = 1.0;
    std::vector<double> w(nb.size());
    for (std::size_t i = 0; i < nb.size(); ++i) {
        const double t = dist[i] / sigma;
        w[i] = std::exp(-0.5 * t * t);
    }
    return w;
}

FlowVector nw_estimate(const MatchSet& matches, const std::vector<BucketIndex::Neighbour>& nb,
                       const std::vector<double>& w) {
    double su = 0.0, sv = 0.0, sw = 0.0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
        const FlowVector d = displacement(matches[static_cast<std::size_t>(nb[i].index)]);
        su += w[i] * d.u;
        sv += w[i] * d.v;
        sw += w[i];
    }
    if (!(sw > 0.0)) {
        // every weight underflowed; the nearest match is the best remaining estimate
        return displacement(matches[static_cast<std::size_t>(nb.front().index)]);
    }
    return {static_cast<float>(su / sw), static_cast<float>(sv / sw)};
}

bool la_estimate(const MatchSet& matches, const std::vector<BucketIndex::Neighbour>& nb,
                 const std::vector<double>& w, int x, int y, FlowVector& out) {
    if (nb.size() < 3) return false;
    // Centred on the query pixel, so the constant term is the estimate.
    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs_u = Eigen::Vector3d::Zero();
    Eigen::Vector3d rhs_v = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < nb.size(); ++i) {
        const Match& m = matches[static_cast<std::size_t>(nb[i].index)];
        const Eigen::Vector3d a(1.0, m.x1 - x, m.y1 - y);
        const FlowVector d = displacement(m);
        normal += w[i] * a * a.transpose();
        rhs_u += w[i] * d.u * a;
        rhs_v += w[i] * d.v * a;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
    lu.setThreshold(1e-10);
    if (lu.rank() < 3) return false;
    out = {static_cast<float>(lu.solve(rhs_u)(0)), static_cast<float>(lu.solve(rhs_v)(0))};
    return std::isfinite(out.u) && std::isfinite(out.v);
}

}  // namespace

MatchSet sparsify_to_grid(const CorrespondenceField& field, int spacing) {
    if (spacing < 1) throw InvalidParameter("grid spacing must be >= 1");
    MatchSet out;
    for (int y = 0; y < field.height(); y += spacing) {
        for (int x = 0; x < field.width(); x += spacing) {
            if (!field.initialized(x, y)) continue;
            const Offset o = field.offset(x, y);
            out.push_back({x, y, x + o.dx, y + o.dy});
        }
    }
    return out;
}

std::string_view to_string(InterpolatorMode mode) { return mode == InterpolatorMode::LA ? "LA" : "NW"; }

InterpolatorMode select_interpolator(std::size_t match_count, int width, int height, double threshold) {
    const double limit = threshold * static_cast<double>(width) * static_cast<double>(height);
    // 0.022 * 10000 lands one ulp below 220; absorb that so the boundary count stays NW
    const double slack = 1e-9 * std::max(1.0, limit);
    return static_cast<double>(match_count) > limit + slack ? InterpolatorMode::LA : InterpolatorMode::NW;
}

FlowField densify(const MatchSet& matches, int width, int height, InterpolatorMode mode, int k) {
    if (matches.empty()) throw InvalidInput("cannot densify an empty match set");
    if (k < 1) throw InvalidParameter("neighbour count must be >= 1");
    const BucketIndex index(matches, width, height);
    FlowField out(width, height);
    std::vector<BucketIndex::Neighbour> nb;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            index.query(x, y, k, nb);
            const std::vector<double> w = gaussian_weights(nb);
            FlowVector est;
            if (mode == InterpolatorMode::LA && la_estimate(matches, nb, w, x, y, est)) {
                out.at(x, y) = est;
            } else {
                out.at(x, y) = nw_estimate(matches, nb, w);
            }
        }
    }
    return out;
}

void export_matches(const MatchSet& matches, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    for (const Match& m : matches) os << m.x1 << ' ' << m.y1 << ' ' << m.x2 << ' ' << m.y2 << '\n';
    if (!os) throw IoError("failed writing " + path.string());
}

MatchSet parse_matches(std::string_view text) {
    MatchSet out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string line(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        std::istringstream is(line);
        std::vector<long long> values;
        std::string token;
        while (is >> token) {
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(token, &used);
            } catch (const std::exception&) {
                throw ParseError(line_no, "not an integer: '" + token + "'");
            }
            if (used != token.size()) throw ParseError(line_no, "not an integer: '" + token + "'");
            values.push_back(v);
        }
        if (values.empty()) continue;
        if (values.size() != 4) {
            throw ParseError(line_no, "expected 4 values (x1 y1 x2 y2), got " + std::to_string(values.size()));
        }
        for (long long v : values) {
            if (v < 0 || v > std::numeric_limits<int>::max()) throw ParseError(line_no, "coordinate out of range");
        }
        out.push_back({static_cast<int>(values[0]), static_cast<int>(values[1]), static_cast<int>(values[2]),
                       static_cast<int>(values[3])});
    }
    return out;
}

MatchSet import_matches(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_matches(buf.str());
}

}  // namespace pgm
