#pragma once

// CSV exchange formats.
//
// Dataset:      header "y,x1,...,xp"; y in {0,1}. The intercept is a fit
//               flag and never a stored column.
// Coefficients: header "term,estimate"; terms "(Intercept)", "x1", ...
// Records:      the fixed replication header (record_header()).
//
// Writers put provenance in leading '#' lines (b-coefficients, seed,
// tolerances); readers skip them. Doubles are written with %.10g, missing
// values as NA.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mjpl/analysis.hpp"
#include "mjpl/glm.hpp"
#include "mjpl/sim.hpp"

namespace mjpl {

std::string format_double(double value);

/// Provenance lines written ahead of every CSV body.
struct OutputMeta {
  RescaleCoefficients b{};
  std::uint64_t seed = 0;
  GlmControl control{};
  std::vector<std::pair<std::string, std::string>> extra;
};

void write_meta(std::ostream& out, const OutputMeta& meta);

/// Throws Errc::parse_error naming the offending line.
LogisticData read_dataset(std::istream& in, bool has_intercept);
LogisticData read_dataset_file(const std::string& path, bool has_intercept);
void write_dataset(std::ostream& out, const LogisticData& data);

struct Coefficients {
  std::vector<std::string> terms;
  Vector estimates;
};

Coefficients coefficients_from_fit(const Vector& theta, bool has_intercept);
void write_coefficients(std::ostream& out, const Coefficients& coefs);
Coefficients read_coefficients(std::istream& in);

const std::string& record_header();
void write_records(std::ostream& out, const std::vector<ReplicationRecord>& records);
std::vector<ReplicationRecord> read_records(std::istream& in);

}  // namespace mjpl
