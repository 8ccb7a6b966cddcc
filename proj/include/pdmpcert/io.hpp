#pragma once

#include "pdmpcert/bracket.hpp"
#include "pdmpcert/certify.hpp"
#include "pdmpcert/domain.hpp"
#include "pdmpcert/flow.hpp"
#include "pdmpcert/models.hpp"
#include "pdmpcert/pdmp.hpp"
#include "pdmpcert/stats.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdmpcert {

/// Insertion-ordered JSON so documents serialize identically on every run.
using Json = nlohmann::ordered_json;

/// Malformed or schema-violating input document.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal (up to 17 significant digits), locale independent.
std::string format_double(double v);

Json point_to_json(const Point& x);
Point point_from_json(const Json& j);
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

/// {"kind": string, "dimension": int, "params": {...}}.
Json domain_to_json(const CompactDomain& dom);
CompactDomain domain_from_json(const Json& j);

/// [[index, duration], ...].
Json schedule_to_json(const SwitchSchedule& s);
SwitchSchedule schedule_from_json(const Json& j);

/// {"kind": "symmetric", "lambda": l} | {"kind": "constant", "matrix": [[...]]}
/// | {"kind": "sin2", "base": [[...]], "amp": [[...]], "freq": f, "axis": k}.
Json rates_to_json(const RateSpec& spec);
RateSpec rates_from_json(const Json& j, int count);

Json params_to_json(const ModelParams& p);
ModelParams params_from_json(ModelKind kind, const Json& j);

struct ModelFile {
    ModelParams params;
    std::optional<RateSpec> rates;
};

/// {"model": name, "params": {...}, "rates": {...}}; "rates" is optional.
Json model_file_to_json(const ModelFile& mf);
ModelFile model_file_from_json(const Json& j);
ModelFile load_model_file(const std::filesystem::path& path);
Model build_model(const ModelFile& mf);

Json to_json(const BracketReport& r);
/// Summary only; per-point rows go to scan_csv.
Json to_json(const ScanResult& r);
Json to_json(const EquilibriumCertificate& c);
Json to_json(const ReachabilityResult& r);
Json to_json(const SubmersionCertificate& c);
Json to_json(const ErgodicityCertificate& c);
Json to_json(const TVDecayReport& r);
Json to_json(const InvasionEstimate& e);
Json to_json(const StationarityResult& r);
Json to_json(const SISLambdaCurve& c);
Json to_json(const SISEquilibrium& e);
Json to_json(const LVIntervals& iv);
Json to_json(const LVClassification& c);
Json to_json(const InvarianceReport& r);
/// Jump count, final state, seed.
Json trajectory_summary(const Trajectory& tr);

/// t,x1,...,xd,i at every output sample.
std::string trajectory_csv(const Trajectory& tr);
/// t,tv,floor,in_fit.
std::string tv_decay_csv(const TVDecayReport& r);
/// g_name,residual,se.
std::string stationarity_csv(const std::vector<StationarityResult>& rs);
/// s,lambda.
std::string sis_curve_csv(const SISLambdaCurve& c);

Json read_json_file(const std::filesystem::path& path);
/// Writes to a temporary file in the same directory and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
/// dump(2) plus a trailing newline.
std::string json_text(const Json& j);

}  // namespace pdmpcert
