#include "pdmpcert/bracket.hpp"

#include "pdmpcert/io.hpp"
#include "pdmpcert/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <sstream>

namespace pdmpcert {

std::string to_string(FamilyKind kind) { return kind == FamilyKind::Weak ? "weak" : "strong"; }

FamilyKind family_kind_from_string(const std::string& name) {
    if (name == "weak") return FamilyKind::Weak;
    if (name == "strong") return FamilyKind::Strong;
    throw std::invalid_argument("unknown bracket family '" + name + "' (expected weak|strong)");
}

RankInfo numerical_rank(const Matrix& m, const RankTolerance& tol) {
    RankInfo info;
    if (m.size() == 0) return info;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    info.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double s1 = info.singular_values.empty() ? 0.0 : info.singular_values.front();
    info.tolerance = std::max(tol.abs, tol.rel * s1);
    for (double s : info.singular_values) {
        if (s > info.tolerance) {
            ++info.rank;
            info.sigma_min_kept = s;
        }
    }
    return info;
}

std::vector<FieldExpr> generate_family(int count, FamilyKind kind, int depth, std::size_t cap) {
    if (count < 1) throw std::invalid_argument("generate_family needs at least one field");
    if (depth < 0) throw std::invalid_argument("bracket depth must be nonnegative");
    if (depth > kMaxJetLevel) throw std::invalid_argument("bracket depth exceeds the supported maximum");
    std::vector<FieldExpr> family;
    std::vector<FieldExpr> level;
    if (kind == FamilyKind::Weak) {
        for (int i = 0; i < count; ++i) level.push_back(FieldExpr::generator(i));
    } else {
        for (int i = 0; i < count; ++i) {
            for (int j = i + 1; j < count; ++j) level.push_back(FieldExpr::difference(i, j));
        }
    }
    auto push = [&](const FieldExpr& e) {
        if (family.size() >= cap) return false;
        family.push_back(e);
        return true;
    };
    for (const auto& e : level) {
        if (!push(e)) return family;
    }
    for (int k = 1; k <= depth; ++k) {
        std::vector<FieldExpr> next;
        for (int i = 0; i < count; ++i) {
            for (const auto& v : level) {
                if (v.kind() == FieldExpr::Kind::Generator) {
                    if (v.first() == i) continue;
                    if (k == 1 && v.first() < i) continue;  // [F^j, F^i] = -[F^i, F^j]
                }
                auto e = FieldExpr::bracket(FieldExpr::generator(i), v);
                if (!push(e)) return family;
                next.push_back(std::move(e));
            }
        }
        level = std::move(next);
        if (level.empty()) break;
    }
    return family;
}

BracketReport rank_at(const VectorFieldSet& fs, const std::vector<FieldExpr>& exprs, const Point& x,
                      const RankTolerance& tol, DiffMode mode) {
    if (exprs.empty()) throw std::invalid_argument("rank_at needs at least one expression");
    Matrix m(fs.dimension(), static_cast<Eigen::Index>(exprs.size()));
    int depth = 0;
    for (std::size_t k = 0; k < exprs.size(); ++k) {
        m.col(static_cast<Eigen::Index>(k)) = eval_expr(fs, exprs[k], x, mode, kMaxJetLevel);
        depth = std::max(depth, exprs[k].depth());
    }
    RankInfo info = numerical_rank(m, tol);
    BracketReport r;
    r.point = x;
    bool strong = std::all_of(exprs.begin(), exprs.end(), [](const FieldExpr& e) {
        const FieldExpr* leaf = &e;
        while (leaf->kind() == FieldExpr::Kind::Bracket) leaf = &leaf->right();
        return leaf->kind() == FieldExpr::Kind::Difference;
    });
    r.kind = strong ? FamilyKind::Strong : FamilyKind::Weak;
    r.depth_used = depth;
    r.vectors_evaluated = exprs.size();
    r.singular_values = std::move(info.singular_values);
    r.numerical_rank = info.rank;
    r.tolerance_used = info.tolerance;
    r.sigma_min_kept = info.sigma_min_kept;
    r.holds = info.rank == fs.dimension();
    return r;
}

BracketReport bracket_report(const VectorFieldSet& fs, FamilyKind kind, int depth, const Point& x,
                             const RankTolerance& tol, DiffMode mode) {
    auto family = generate_family(fs.count(), kind, depth);
    if (family.empty()) {
        // Strong family of a single field: only the zero field remains.
        BracketReport r;
        r.point = x;
        r.kind = kind;
        r.depth_used = depth;
        r.tolerance_used = tol.abs;
        r.singular_values.assign(static_cast<std::size_t>(fs.dimension()), 0.0);
        return r;
    }
    BracketReport r = rank_at(fs, family, x, tol, mode);
    r.kind = kind;
    r.depth_used = depth;
    return r;
}

ScanResult scan(const VectorFieldSet& fs, const CompactDomain& dom, FamilyKind kind, int depth,
                const std::vector<int>& resolution, const RankTolerance& tol, int threads, DiffMode mode) {
    if (dom.dimension() != fs.dimension()) throw std::invalid_argument("domain and field set dimensions differ");
    const auto grid = dom.sample_grid(resolution);
    ScanResult out;
    out.kind = kind;
    out.depth = depth;
    out.reports.resize(grid.size());
    const auto family = generate_family(fs.count(), kind, depth);
    parallel_for(grid.size(), threads, [&](std::size_t k) {
        if (family.empty()) {
            out.reports[k] = bracket_report(fs, kind, depth, grid[k], tol, mode);
        } else {
            out.reports[k] = rank_at(fs, family, grid[k], tol, mode);
            out.reports[k].kind = kind;
            out.reports[k].depth_used = depth;
        }
    });
    out.max_rank = 0;
    out.min_rank = fs.dimension();
    for (const auto& r : out.reports) {
        out.max_rank = std::max(out.max_rank, r.numerical_rank);
        out.min_rank = std::min(out.min_rank, r.numerical_rank);
        if (r.holds) ++out.holds_count;
    }
    for (std::size_t k = 0; k < out.reports.size(); ++k) {
        if (out.reports[k].numerical_rank == out.max_rank) out.argmax.push_back(k);
    }
    return out;
}

std::string scan_csv(const ScanResult& result) {
    std::ostringstream os;
    const int d = result.reports.empty() ? 0 : static_cast<int>(result.reports.front().point.size());
    for (int a = 0; a < d; ++a) os << 'x' << (a + 1) << ',';
    os << "kind,K,rank,sigma_min_kept\n";
    for (const auto& r : result.reports) {
        for (int a = 0; a < d; ++a) os << format_double(r.point[a]) << ',';
        os << to_string(r.kind) << ',' << r.depth_used << ',' << r.numerical_rank << ','
           << format_double(r.sigma_min_kept) << '\n';
    }
    return os.str();
}

}  // namespace pdmpcert
