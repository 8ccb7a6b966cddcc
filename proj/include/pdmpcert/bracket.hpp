#pragma once

#include "pdmpcert/domain.hpp"
#include "pdmpcert/fields.hpp"

#include <string>
#include <vector>

namespace pdmpcert {

enum class FamilyKind { Weak, Strong };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

inline constexpr std::size_t kMaxFamilySize = 512;

/// tau = max(abs, rel * sigma_1).
struct RankTolerance {
    double abs = 1e-9;
    double rel = 1e-6;
};

struct RankInfo {
    std::vector<double> singular_values;  // descending
    int rank = 0;
    double tolerance = 0.0;
    double sigma_min_kept = 0.0;  // smallest singular value above tolerance, 0 if rank 0
};

RankInfo numerical_rank(const Matrix& m, const RankTolerance& tol = {});

struct BracketReport {
    Point point;
    FamilyKind kind = FamilyKind::Weak;
    int depth_used = 0;
    std::size_t vectors_evaluated = 0;
    std::vector<double> singular_values;
    int numerical_rank = 0;
    double tolerance_used = 0.0;
    double sigma_min_kept = 0.0;
    bool holds = false;
};

/// Weak: F_0 = {F^i}, F_{k+1} = F_k with [F^i, V] added for V new at level k.
/// Strong: leaves F^i - F^j (i < j). [F^i, F^i] and, at depth 1, the
/// antisymmetric partner [F^j, F^i] are dropped. Order is deterministic and
/// the list is truncated at `cap`.
std::vector<FieldExpr> generate_family(int count, FamilyKind kind, int depth, std::size_t cap = kMaxFamilySize);

BracketReport rank_at(const VectorFieldSet& fs, const std::vector<FieldExpr>& exprs, const Point& x,
                      const RankTolerance& tol = {}, DiffMode mode = DiffMode::Auto);

/// generate_family + rank_at.
BracketReport bracket_report(const VectorFieldSet& fs, FamilyKind kind, int depth, const Point& x,
                             const RankTolerance& tol = {}, DiffMode mode = DiffMode::Auto);

struct ScanResult {
    FamilyKind kind = FamilyKind::Weak;
    int depth = 0;
    std::vector<BracketReport> reports;  // grid order
    int max_rank = 0;
    int min_rank = 0;
    std::vector<std::size_t> argmax;     // indices of reports reaching max_rank
    std::size_t holds_count = 0;
};

ScanResult scan(const VectorFieldSet& fs, const CompactDomain& dom, FamilyKind kind, int depth,
                const std::vector<int>& resolution, const RankTolerance& tol = {}, int threads = 1,
                DiffMode mode = DiffMode::Auto);

/// Header "x1,...,xd,kind,K,rank,sigma_min_kept" then one row per grid point.
std::string scan_csv(const ScanResult& result);

}  // namespace pdmpcert
