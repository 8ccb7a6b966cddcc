#include "pdmpcert/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pdmpcert {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMembershipTol = 1e-12;

double wrap_periodic(double v, double period) {
    double w = v - period * std::floor(v / period);
    // floor can round up to exactly `period` for tiny negative inputs
    return w >= period ? 0.0 : w;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        out[static_cast<std::size_t>(k)] = (k == n - 1) ? b : a + (b - a) * k / (n - 1);
    }
    return out;
}

std::vector<double> periodic_lattice(double period, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = period * k / n;
    return out;
}

std::vector<Point> product_lattice(const std::vector<std::vector<double>>& axes) {
    std::vector<Point> out;
    const std::size_t d = axes.size();
    std::vector<std::size_t> idx(d, 0);
    while (true) {
        Point p(static_cast<Eigen::Index>(d));
        for (std::size_t a = 0; a < d; ++a) p[static_cast<Eigen::Index>(a)] = axes[a][idx[a]];
        out.push_back(std::move(p));
        // last axis varies fastest
        std::size_t a = d;
        while (a > 0) {
            --a;
            if (++idx[a] < axes[a].size()) break;
            idx[a] = 0;
            if (a == 0) return out;
        }
        if (d == 0) return out;
    }
}
}  // namespace

std::string to_string(DomainKind kind) {
    switch (kind) {
        case DomainKind::Box: return "box";
        case DomainKind::Annulus: return "annulus";
        case DomainKind::Torus: return "torus";
        case DomainKind::QuadrantBand: return "quadrant_band";
        case DomainKind::UnitBox: return "unit_box";
    }
    return "unknown";
}

DomainKind domain_kind_from_string(const std::string& name) {
    if (name == "box") return DomainKind::Box;
    if (name == "annulus") return DomainKind::Annulus;
    if (name == "torus") return DomainKind::Torus;
    if (name == "quadrant_band") return DomainKind::QuadrantBand;
    if (name == "unit_box") return DomainKind::UnitBox;
    throw std::invalid_argument("unknown domain kind '" + name + "'");
}

CompactDomain CompactDomain::box(std::vector<double> lower, std::vector<double> upper) {
    if (lower.empty() || lower.size() != upper.size()) {
        throw std::invalid_argument("box bounds must be nonempty and of equal length");
    }
    for (std::size_t k = 0; k < lower.size(); ++k) {
        if (!(lower[k] < upper[k])) throw std::invalid_argument("box requires lower < upper coordinatewise");
    }
    CompactDomain dom;
    dom.kind_ = DomainKind::Box;
    dom.dimension_ = static_cast<int>(lower.size());
    dom.lower_ = std::move(lower);
    dom.upper_ = std::move(upper);
    return dom;
}

CompactDomain CompactDomain::unit_box(int dimension) {
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    CompactDomain dom;
    dom.kind_ = DomainKind::UnitBox;
    dom.dimension_ = dimension;
    dom.lower_.assign(static_cast<std::size_t>(dimension), 0.0);
    dom.upper_.assign(static_cast<std::size_t>(dimension), 1.0);
    return dom;
}

CompactDomain CompactDomain::torus(int dimension) {
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    CompactDomain dom;
    dom.kind_ = DomainKind::Torus;
    dom.dimension_ = dimension;
    dom.lower_.assign(static_cast<std::size_t>(dimension), 0.0);
    dom.upper_.assign(static_cast<std::size_t>(dimension), 1.0);
    return dom;
}

CompactDomain CompactDomain::annulus(double r_min, double r_max, AnnulusChart chart) {
    if (!(r_min > 0.0 && r_min < r_max)) throw std::invalid_argument("annulus requires 0 < r_min < r_max");
    CompactDomain dom;
    dom.kind_ = DomainKind::Annulus;
    dom.dimension_ = 2;
    dom.chart_ = chart;
    dom.r_min_ = r_min;
    dom.r_max_ = r_max;
    return dom;
}

CompactDomain CompactDomain::quadrant_band(double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("quadrant band requires 0 < eta < 1");
    CompactDomain dom;
    dom.kind_ = DomainKind::QuadrantBand;
    dom.dimension_ = 2;
    dom.eta_ = eta;
    return dom;
}

void CompactDomain::check_dimension(std::size_t n) const {
    if (n != static_cast<std::size_t>(dimension_)) {
        std::ostringstream msg;
        msg << "point has dimension " << n << " but domain " << to_string(kind_) << " has dimension " << dimension_;
        throw std::invalid_argument(msg.str());
    }
}

std::vector<double> CompactDomain::chart_lower() const {
    switch (kind_) {
        case DomainKind::Annulus:
            if (chart_ == AnnulusChart::Polar) return {0.0, r_min_};
            return {-r_max_, -r_max_};
        case DomainKind::QuadrantBand: return {0.0, 0.0};
        default: return lower_;
    }
}

std::vector<double> CompactDomain::chart_upper() const {
    switch (kind_) {
        case DomainKind::Annulus:
            if (chart_ == AnnulusChart::Polar) return {kTwoPi, r_max_};
            return {r_max_, r_max_};
        case DomainKind::QuadrantBand: return {1.0 / eta_, 1.0 / eta_};
        default: return upper_;
    }
}

std::vector<bool> CompactDomain::periodic_axes() const {
    std::vector<bool> out(static_cast<std::size_t>(dimension_), false);
    if (kind_ == DomainKind::Torus) std::fill(out.begin(), out.end(), true);
    if (kind_ == DomainKind::Annulus && chart_ == AnnulusChart::Polar) out[0] = true;
    return out;
}

double CompactDomain::diameter() const {
    switch (kind_) {
        case DomainKind::Box:
        case DomainKind::UnitBox: {
            double s = 0.0;
            for (std::size_t k = 0; k < lower_.size(); ++k) s += (upper_[k] - lower_[k]) * (upper_[k] - lower_[k]);
            return std::sqrt(s);
        }
        case DomainKind::Torus: return 0.5 * std::sqrt(static_cast<double>(dimension_));
        case DomainKind::Annulus: return 2.0 * r_max_;
        case DomainKind::QuadrantBand: return std::sqrt(2.0) / eta_;
    }
    return 0.0;
}

bool CompactDomain::contains(std::span<const double> x) const {
    check_dimension(x.size());
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    switch (kind_) {
        case DomainKind::Torus: return true;
        case DomainKind::Box:
        case DomainKind::UnitBox:
            for (std::size_t k = 0; k < x.size(); ++k) {
                double tol = kMembershipTol * (1.0 + std::abs(upper_[k] - lower_[k]));
                if (x[k] < lower_[k] - tol || x[k] > upper_[k] + tol) return false;
            }
            return true;
        case DomainKind::Annulus: {
            double r = chart_ == AnnulusChart::Polar ? x[1] : std::hypot(x[0], x[1]);
            double tol = kMembershipTol * r_max_;
            return r >= r_min_ - tol && r <= r_max_ + tol;
        }
        case DomainKind::QuadrantBand: {
            double tol = kMembershipTol / eta_;
            double s = x[0] + x[1];
            return x[0] >= -tol && x[1] >= -tol && s >= eta_ - tol && s <= 1.0 / eta_ + tol;
        }
    }
    return false;
}

double CompactDomain::excursion(std::span<const double> x) const {
    check_dimension(x.size());
    double e = 0.0;
    switch (kind_) {
        case DomainKind::Torus: return 0.0;
        case DomainKind::Box:
        case DomainKind::UnitBox: {
            double s = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                double o = std::max({lower_[k] - x[k], x[k] - upper_[k], 0.0});
                s += o * o;
            }
            return std::sqrt(s);
        }
        case DomainKind::Annulus: {
            double r = chart_ == AnnulusChart::Polar ? x[1] : std::hypot(x[0], x[1]);
            return std::max({r_min_ - r, r - r_max_, 0.0});
        }
        case DomainKind::QuadrantBand: {
            double s = x[0] + x[1];
            e = std::max({-x[0], -x[1], (eta_ - s) / std::sqrt(2.0), (s - 1.0 / eta_) / std::sqrt(2.0), 0.0});
            return e;
        }
    }
    return e;
}

void CompactDomain::wrap_in_place(std::span<double> x) const {
    check_dimension(x.size());
    if (kind_ == DomainKind::Torus) {
        for (double& v : x) v = wrap_periodic(v, 1.0);
    } else if (kind_ == DomainKind::Annulus && chart_ == AnnulusChart::Polar) {
        x[0] = wrap_periodic(x[0], kTwoPi);
    }
}

Point CompactDomain::wrap(const Point& x) const {
    Point y = x;
    wrap_in_place(std::span<double>(y.data(), y.size()));
    return y;
}

Point CompactDomain::project(const Point& x) const {
    Point y = wrap(x);
    switch (kind_) {
        case DomainKind::Torus: break;
        case DomainKind::Box:
        case DomainKind::UnitBox:
            for (Eigen::Index k = 0; k < y.size(); ++k) {
                y[k] = std::clamp(y[k], lower_[static_cast<std::size_t>(k)], upper_[static_cast<std::size_t>(k)]);
            }
            break;
        case DomainKind::Annulus:
            if (chart_ == AnnulusChart::Polar) {
                y[1] = std::clamp(y[1], r_min_, r_max_);
            } else {
                double r = y.norm();
                if (r == 0.0) {
                    y << r_min_, 0.0;
                } else {
                    y *= std::clamp(r, r_min_, r_max_) / r;
                }
            }
            break;
        case DomainKind::QuadrantBand: {
            y[0] = std::max(y[0], 0.0);
            y[1] = std::max(y[1], 0.0);
            double s = y[0] + y[1];
            if (s == 0.0) {
                y << 0.5 * eta_, 0.5 * eta_;
            } else {
                y *= std::clamp(s, eta_, 1.0 / eta_) / s;
            }
            break;
        }
    }
    return y;
}

double CompactDomain::distance(std::span<const double> a, std::span<const double> b) const {
    check_dimension(a.size());
    check_dimension(b.size());
    if (kind_ == DomainKind::Torus) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            double d = std::abs(a[k] - b[k]);
            d -= std::floor(d);
            d = std::min(d, 1.0 - d);
            s += d * d;
        }
        return std::sqrt(s);
    }
    if (kind_ == DomainKind::Annulus && chart_ == AnnulusChart::Polar) {
        double s = a[1] * a[1] + b[1] * b[1] - 2.0 * a[1] * b[1] * std::cos(a[0] - b[0]);
        return std::sqrt(std::max(s, 0.0));
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

double CompactDomain::distance(const Point& a, const Point& b) const {
    return distance(std::span<const double>(a.data(), a.size()), std::span<const double>(b.data(), b.size()));
}

std::vector<Point> CompactDomain::sample_grid(const std::vector<int>& resolution) const {
    std::vector<int> res = resolution;
    if (res.size() == 1 && dimension_ > 1) res.assign(static_cast<std::size_t>(dimension_), resolution.front());
    if (res.size() != static_cast<std::size_t>(dimension_)) {
        throw std::invalid_argument("grid resolution must have one entry per axis");
    }
    for (int n : res) {
        if (n < 2) throw std::invalid_argument("grid resolution must be at least 2 per axis");
    }

    std::vector<std::vector<double>> axes;
    switch (kind_) {
        case DomainKind::Box:
        case DomainKind::UnitBox:
            for (std::size_t k = 0; k < res.size(); ++k) axes.push_back(linspace(lower_[k], upper_[k], res[k]));
            return product_lattice(axes);
        case DomainKind::Torus:
            for (int n : res) axes.push_back(periodic_lattice(1.0, n));
            return product_lattice(axes);
        case DomainKind::Annulus: {
            axes.push_back(periodic_lattice(kTwoPi, res[0]));
            axes.push_back(linspace(r_min_, r_max_, res[1]));
            auto pts = product_lattice(axes);
            if (chart_ == AnnulusChart::Cartesian) {
                for (auto& p : pts) p = polar_to_cartesian(p);
            }
            return pts;
        }
        case DomainKind::QuadrantBand: {
            axes.push_back(linspace(0.0, 1.0 / eta_, res[0]));
            axes.push_back(linspace(0.0, 1.0 / eta_, res[1]));
            auto pts = product_lattice(axes);
            std::erase_if(pts, [&](const Point& p) { return !contains(p); });
            return pts;
        }
    }
    return {};
}

Point CompactDomain::sample_uniform(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    return sample_uniform(rng);
}

Point CompactDomain::sample_uniform(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Point p(dimension_);
    switch (kind_) {
        case DomainKind::Torus:
        case DomainKind::Box:
        case DomainKind::UnitBox:
            for (int k = 0; k < dimension_; ++k) {
                auto kk = static_cast<std::size_t>(k);
                p[k] = lower_[kk] + (upper_[kk] - lower_[kk]) * unit(rng);
            }
            if (kind_ == DomainKind::Torus) wrap_in_place(std::span<double>(p.data(), p.size()));
            return p;
        case DomainKind::Annulus:
            while (true) {
                p << r_max_ * (2.0 * unit(rng) - 1.0), r_max_ * (2.0 * unit(rng) - 1.0);
                double r = p.norm();
                if (r >= r_min_ && r <= r_max_) break;
            }
            return chart_ == AnnulusChart::Polar ? cartesian_to_polar(p) : p;
        case DomainKind::QuadrantBand:
            while (true) {
                p << unit(rng) / eta_, unit(rng) / eta_;
                if (contains(p)) break;
            }
            return p;
    }
    return p;
}

Point polar_to_cartesian(const Point& polar) {
    Point c(2);
    c << polar[1] * std::cos(polar[0]), polar[1] * std::sin(polar[0]);
    return c;
}

Point cartesian_to_polar(const Point& cartesian) {
    Point p(2);
    p << wrap_periodic(std::atan2(cartesian[1], cartesian[0]), kTwoPi), cartesian.norm();
    return p;
}

}  // namespace pdmpcert
