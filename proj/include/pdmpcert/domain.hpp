#pragma once

#include "pdmpcert/types.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pdmpcert {

enum class DomainKind { Box, Annulus, Torus, QuadrantBand, UnitBox };

/// Coordinate chart in which points of an annulus are expressed.
enum class AnnulusChart { Cartesian, Polar };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

/// The compact positively invariant state space M.
///
/// Box: lower < upper coordinatewise. Annulus: 0 < r_min < r_max in the plane,
/// points either Cartesian (x, y) or polar (theta, r). Torus: [0,1)^d with
/// period 1. QuadrantBand: {x, y >= 0, eta <= x + y <= 1/eta}. UnitBox: [0,1]^d.
class CompactDomain {
public:
    static CompactDomain box(std::vector<double> lower, std::vector<double> upper);
    static CompactDomain unit_box(int dimension);
    static CompactDomain torus(int dimension);
    static CompactDomain annulus(double r_min, double r_max, AnnulusChart chart = AnnulusChart::Cartesian);
    static CompactDomain quadrant_band(double eta);

    DomainKind kind() const { return kind_; }
    int dimension() const { return dimension_; }
    AnnulusChart chart() const { return chart_; }

    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }
    double eta() const { return eta_; }

    /// Coordinate-wise bounding box of M in its own chart (polar: theta in [0, 2pi)).
    std::vector<double> chart_lower() const;
    std::vector<double> chart_upper() const;
    /// True for coordinates that are periodic in this chart.
    std::vector<bool> periodic_axes() const;

    double diameter() const;

    bool contains(std::span<const double> x) const;
    bool contains(const Point& x) const { return contains(std::span<const double>(x.data(), x.size())); }

    /// Distance from x to M (0 inside).
    double excursion(std::span<const double> x) const;
    double excursion(const Point& x) const { return excursion(std::span<const double>(x.data(), x.size())); }

    /// Reduces periodic coordinates into their fundamental cell (Torus: [0,1);
    /// polar annulus: theta into [0, 2pi)). Identity on other kinds.
    void wrap_in_place(std::span<double> x) const;
    Point wrap(const Point& x) const;

    /// wrap followed by clamping onto M.
    Point project(const Point& x) const;

    /// Metric of M: wrapped metric on the torus, Euclidean distance of the
    /// embedded points for the polar annulus, Euclidean otherwise.
    double distance(std::span<const double> a, std::span<const double> b) const;
    double distance(const Point& a, const Point& b) const;

    std::vector<Point> sample_grid(const std::vector<int>& resolution) const;
    Point sample_uniform(std::uint64_t seed) const;
    Point sample_uniform(std::mt19937_64& rng) const;

    bool operator==(const CompactDomain&) const = default;

private:
    CompactDomain() = default;
    void check_dimension(std::size_t n) const;

    DomainKind kind_ = DomainKind::UnitBox;
    int dimension_ = 1;
    AnnulusChart chart_ = AnnulusChart::Cartesian;
    std::vector<double> lower_, upper_;
    double r_min_ = 0.0, r_max_ = 0.0;
    double eta_ = 0.0;
};

Point polar_to_cartesian(const Point& polar);
Point cartesian_to_polar(const Point& cartesian);

}  // namespace pdmpcert
