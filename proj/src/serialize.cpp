#include "tomolab/serialize.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace tomolab {

namespace {

using nlohmann::json;

void append_real_array(std::string& out, const RealVector& v) {
    out += '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        out += format_g17(v(i));
    }
    out += ']';
}

void append_real_rows(std::string& out, const RealMatrix& m) {
    out += '[';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i > 0) out += ',';
        append_real_array(out, m.row(i).transpose());
    }
    out += ']';
}

// Columns of a (possibly rectangular) complex matrix as
// [{"re":[...],"im":[...]}, ...].
void append_columns(std::string& out, const Matrix& m) {
    out += '[';
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j > 0) out += ',';
        out += "{\"re\":";
        append_real_array(out, m.col(j).real());
        out += ",\"im\":";
        append_real_array(out, m.col(j).imag());
        out += '}';
    }
    out += ']';
}

json parse_or_throw(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw std::invalid_argument(std::string(what) + ": not valid JSON");
    }
    return j;
}

const json& field(const json& j, const char* key, const char* what) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw std::invalid_argument(std::string(what) + ": missing field \"" + key + "\"");
    }
    return *it;
}

RealVector real_vector_field(const json& j, const char* key, const char* what) {
    const json& arr = field(j, key, what);
    if (!arr.is_array()) {
        throw std::invalid_argument(std::string(what) + ": field \"" + key +
                                    "\" must be an array");
    }
    RealVector v(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const json& entry : arr) {
        if (!entry.is_number()) {
            throw std::invalid_argument(std::string(what) + ": field \"" + key +
                                        "\" must hold numbers");
        }
        v(i++) = entry.get<double>();
    }
    return v;
}

RealMatrix real_matrix_field(const json& j, const char* key, int dim, const char* what) {
    const json& rows = field(j, key, what);
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim) {
        throw std::invalid_argument(std::string(what) + ": field \"" + key + "\" must be " +
                                    std::to_string(dim) + " rows");
    }
    RealMatrix m(dim, dim);
    Eigen::Index r = 0;
    for (const json& row : rows) {
        if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            throw std::invalid_argument(std::string(what) + ": field \"" + key +
                                        "\" rows must have " + std::to_string(dim) +
                                        " entries");
        }
        Eigen::Index c = 0;
        for (const json& entry : row) {
            if (!entry.is_number()) {
                throw std::invalid_argument(std::string(what) + ": field \"" + key +
                                            "\" must hold numbers");
            }
            m(r, c++) = entry.get<double>();
        }
        ++r;
    }
    return m;
}

}  // namespace

std::string format_g17(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out;
    out.reserve(field.size() + 2);
    out += '"';
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

std::string matrix_to_json(const Matrix& m) {
    require(m.rows() == m.cols(), "matrix_to_json: matrix must be square");
    std::string out = "{\"dim\":" + std::to_string(m.rows()) + ",\"re\":";
    append_real_rows(out, m.real());
    out += ",\"im\":";
    append_real_rows(out, m.imag());
    out += '}';
    return out;
}

std::string state_to_json(const DensityMatrix& rho) { return matrix_to_json(rho.raw()); }

DensityMatrix state_from_json(const std::string& text) {
    const char* what = "state JSON";
    json j = parse_or_throw(text, what);
    if (!j.is_object()) throw std::invalid_argument("state JSON: top level must be an object");
    const json& dim_field = field(j, "dim", what);
    if (!dim_field.is_number_integer()) {
        throw std::invalid_argument("state JSON: field \"dim\" must be an integer");
    }
    const int dim = dim_field.get<int>();
    if (dim < 1) throw std::invalid_argument("state JSON: field \"dim\" must be positive");
    RealMatrix re = real_matrix_field(j, "re", dim, what);
    RealMatrix im = real_matrix_field(j, "im", dim, what);
    Matrix m = re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
    return DensityMatrix(HermitianMatrix(std::move(m)));
}

std::string outcome_to_json(const MeasurementOutcome& outcome) {
    std::string out = "{\"kind\":\"";
    out += outcome.kind == OutcomeKind::Vector ? "vec" : "bot";
    out += "\",\"re\":";
    append_real_array(out, outcome.vector.real());
    out += ",\"im\":";
    append_real_array(out, outcome.vector.imag());
    out += ",\"r\":" + std::to_string(outcome.subspace_rank) + "}";
    return out;
}

MeasurementOutcome outcome_from_json(const std::string& line) {
    const char* what = "outcome JSON";
    json j = parse_or_throw(line, what);
    if (!j.is_object()) throw std::invalid_argument("outcome JSON: top level must be an object");
    const json& kind_field = field(j, "kind", what);
    if (!kind_field.is_string()) {
        throw std::invalid_argument("outcome JSON: field \"kind\" must be a string");
    }
    const std::string kind = kind_field.get<std::string>();
    const json& rank_field = field(j, "r", what);
    if (!rank_field.is_number_integer() || rank_field.get<int>() < 0) {
        throw std::invalid_argument("outcome JSON: field \"r\" must be a nonnegative integer");
    }
    MeasurementOutcome outcome;
    outcome.subspace_rank = rank_field.get<int>();
    RealVector re = real_vector_field(j, "re", what);
    RealVector im = real_vector_field(j, "im", what);
    if (re.size() != im.size()) {
        throw std::invalid_argument("outcome JSON: \"re\" and \"im\" lengths differ");
    }
    if (kind == "vec") {
        if (re.size() == 0) {
            throw std::invalid_argument("outcome JSON: \"vec\" outcome needs a nonempty vector");
        }
        outcome.kind = OutcomeKind::Vector;
        outcome.vector = re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
    } else if (kind == "bot") {
        if (re.size() != 0) {
            throw std::invalid_argument("outcome JSON: \"bot\" outcome must have empty arrays");
        }
        outcome.kind = OutcomeKind::Bottom;
        outcome.vector = Vector();
    } else {
        throw std::invalid_argument("outcome JSON: field \"kind\" must be \"vec\" or \"bot\"");
    }
    return outcome;
}

void write_transcript(std::ostream& out, const Transcript& transcript) {
    for (const MeasurementOutcome& outcome : transcript.outcomes) {
        out << outcome_to_json(outcome) << '\n';
    }
}

Transcript read_transcript(std::istream& in) {
    Transcript transcript;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        transcript.outcomes.push_back(outcome_from_json(line));
    }
    return transcript;
}

std::string estimator_report_to_json(const EstimatorReport& report) {
    std::string out = "{\"estimate\":" + matrix_to_json(report.estimate.raw());
    out += ",\"copies_used\":" + std::to_string(report.copies_used);
    out += ",\"subspace_rank\":" + std::to_string(report.subspace_rank);
    out += ",\"bottom_count\":" + std::to_string(report.bottom_count);
    out += ",\"predicted_bound\":";
    out += report.predicted_bound ? format_g17(*report.predicted_bound) : "null";
    out += '}';
    return out;
}

std::string adaptive_estimate_to_json(const AdaptiveEstimate& estimate,
                                      const DiagnosticsReport* diagnostics) {
    std::string out = "{\"state\":" + state_to_json(estimate.state);
    out += ",\"copies_per_round\":" + std::to_string(estimate.copies_per_round);
    out += ",\"gamma_target\":" + format_g17(estimate.gamma_target);
    out += ",\"rank_hint\":" + std::to_string(estimate.rank_hint);
    out += ",\"rounds\":[";
    bool first = true;
    for (const BandRound& round : estimate.decomposition.rounds) {
        if (!first) out += ',';
        first = false;
        out += "{\"threshold\":" + format_g17(round.threshold);
        out += ",\"band_basis\":";
        append_columns(out, round.band_basis.columns());
        out += ",\"eigenvalues\":";
        append_real_array(out, round.block_eigenvalues);
        out += ",\"sigma\":" + matrix_to_json(round.sigma_compressed);
        out += ",\"copies\":" + std::to_string(round.copies);
        out += ",\"bottom_count\":" + std::to_string(round.bottom_count) + "}";
    }
    out += "],\"residual_basis\":";
    append_columns(out, estimate.decomposition.residual_basis.columns());
    if (diagnostics != nullptr) {
        out += ",\"diagnostics\":{\"rounds\":[";
        first = true;
        for (const RoundDiagnostics& d : diagnostics->rounds) {
            if (!first) out += ',';
            first = false;
            out += "{\"round\":" + std::to_string(d.round);
            out += ",\"threshold\":" + format_g17(d.threshold);
            out += ",\"gamma_rho_op\":" + format_g17(d.gamma_rho_op);
            out += ",\"sigma_op\":" + format_g17(d.sigma_op);
            out += ",\"band_min_eig\":" + format_g17(d.band_min_eig);
            out += ",\"band_rank\":" + std::to_string(d.band_rank);
            out += ",\"gamma_j\":" + format_g17(d.gamma_j);
            out += ",\"gamma_j_ratio\":" + format_g17(d.gamma_j_ratio);
            out += ",\"alpha_j\":" + format_g17(d.alpha_j);
            out += ",\"pass\":";
            const bool round_pass = d.band_cap && d.sigma_cap && d.band_floor && d.rank_ok;
            out += round_pass ? "true" : "false";
            out += '}';
        }
        out += "],\"residual_mass\":" + format_g17(diagnostics->residual_mass);
        out += ",\"residual_ok\":";
        out += diagnostics->residual_ok ? "true" : "false";
        out += ",\"all_pass\":";
        out += diagnostics->all_pass ? "true" : "false";
        out += '}';
    }
    out += '}';
    return out;
}

}  // namespace tomolab
