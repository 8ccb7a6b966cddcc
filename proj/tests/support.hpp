#pragma once

#include "pdmpcert/fields.hpp"
#include "pdmpcert/io.hpp"
#include "pdmpcert/models.hpp"

#include <initializer_list>
#include <string>

namespace testing {

inline pdmpcert::Point pt(std::initializer_list<double> v) {
    pdmpcert::Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) p[k++] = x;
    return p;
}

inline std::string fixture(const std::string& name) { return std::string(PDMP_FIXTURE_DIR) + "/" + name; }

inline pdmpcert::Model fixture_model(const std::string& name) {
    return pdmpcert::build_model(pdmpcert::load_model_file(fixture(name)));
}

/// F^i = constant vectors c_i.
inline pdmpcert::VectorFieldSet constant_fields(std::vector<pdmpcert::Point> c, int dim) {
    return pdmpcert::VectorFieldSet::from_generic(static_cast<int>(c.size()), dim, pdmpcert::Chart::Cartesian,
                                                  "constant", [c](int i, auto, auto out) {
                                                      for (std::size_t k = 0; k < out.size(); ++k) {
                                                          out[k] = c[static_cast<std::size_t>(i)][static_cast<Eigen::Index>(k)];
                                                      }
                                                  });
}

/// F(x) = A x.
inline pdmpcert::VectorFieldSet linear_field(const pdmpcert::Matrix& A) {
    return pdmpcert::VectorFieldSet::from_generic(1, static_cast<int>(A.rows()), pdmpcert::Chart::Cartesian, "linear",
                                                  [A](int, auto x, auto out) {
                                                      for (std::size_t a = 0; a < out.size(); ++a) {
                                                          out[a] = 0.0;
                                                          for (std::size_t b = 0; b < x.size(); ++b) {
                                                              out[a] += A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * x[b];
                                                          }
                                                      }
                                                  });
}

/// Scalar logistic r' = r (1 - r) as a one-field set in d = 1.
inline pdmpcert::VectorFieldSet logistic_field() {
    return pdmpcert::VectorFieldSet::from_generic(1, 1, pdmpcert::Chart::Cartesian, "logistic",
                                                  [](int, auto x, auto out) { out[0] = x[0] * (1.0 - x[0]); });
}

inline double logistic_exact(double r0, double t) {
    return r0 * std::exp(t) / (1.0 - r0 + r0 * std::exp(t));
}

}  // namespace testing
