#pragma once

#include <iosfwd>
#include <string>

#include "tomolab/adaptive.hpp"
#include "tomolab/estimators.hpp"
#include "tomolab/linalg.hpp"
#include "tomolab/measurement.hpp"

namespace tomolab {

// "%.17g" with the C locale: enough digits to round-trip a double exactly,
// '.' decimal point regardless of environment.
std::string format_g17(double value);

// RFC-4180 field quoting: wraps fields containing comma, quote, CR or LF in
// double quotes and doubles embedded quotes. Other fields pass through.
std::string csv_escape(const std::string& field);

// Square complex matrix as {"dim":d,"re":[[row-major]],"im":[[...]]}.
std::string matrix_to_json(const Matrix& m);

std::string state_to_json(const DensityMatrix& rho);
DensityMatrix state_from_json(const std::string& text);

// One outcome as {"kind":"vec"|"bot","re":[...],"im":[...],"r":rank}.
std::string outcome_to_json(const MeasurementOutcome& outcome);
MeasurementOutcome outcome_from_json(const std::string& line);

// Transcripts as JSON lines, one outcome per line.
void write_transcript(std::ostream& out, const Transcript& transcript);
Transcript read_transcript(std::istream& in);

std::string estimator_report_to_json(const EstimatorReport& report);

// Bases serialize as lists of columns, blocks as matrices. The diagnostics
// report, when supplied, is attached as flat per-round scalars.
std::string adaptive_estimate_to_json(const AdaptiveEstimate& estimate,
                                      const DiagnosticsReport* diagnostics = nullptr);

}  // namespace tomolab
