#include "mjpl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mjpl {

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }
std::string opt(const std::optional<bool>& v) { return v ? (*v ? "1" : "0") : "NA"; }

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(Errc::parse_error, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.pop_back();
    std::size_t start = field.find_first_not_of(' ');
    out.push_back(start == std::string::npos ? std::string{} : field.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    parse_fail(line, "column '" + column + "': not a finite number: '" + s + "'");
  }
  return v;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line, const std::string& column) {
  if (s == "NA") return std::nullopt;
  return parse_number(s, line, column);
}

// Next non-comment, non-blank line; false at end of input.
bool next_line(std::istream& in, std::string& line, std::size_t& number) {
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

void write_meta(std::ostream& out, const OutputMeta& meta) {
  out << "# b0=" << format_double(meta.b.b0) << " b1=" << format_double(meta.b.b1)
      << " b2=" << format_double(meta.b.b2) << " b3=" << format_double(meta.b.b3) << '\n';
  out << "# seed=" << meta.seed << '\n';
  out << "# tol=" << format_double(meta.control.tol) << " max_iter=" << meta.control.max_iter << '\n';
  for (const auto& [k, v] : meta.extra) out << "# " << k << '=' << v << '\n';
}

// ---------------------------------------------------------------------------

LogisticData read_dataset(std::istream& in, bool has_intercept) {
  std::string line;
  std::size_t number = 0;
  if (!next_line(in, line, number)) parse_fail(number, "empty dataset");
  const auto header = split(line);
  if (header.empty() || header[0] != "y") parse_fail(number, "first column must be 'y'");
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "x" + std::to_string(j)) parse_fail(number, "expected column 'x" + std::to_string(j) + "'");
  }
  const std::size_t p = header.size() - 1;

  std::vector<double> ys;
  std::vector<double> xs;
  while (next_line(in, line, number)) {
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      parse_fail(number, "expected " + std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
    }
    const double y = parse_number(fields[0], number, "y");
    if (y != 0.0 && y != 1.0) parse_fail(number, "y must be 0 or 1");
    ys.push_back(y);
    for (std::size_t j = 1; j <= p; ++j) xs.push_back(parse_number(fields[j], number, header[j]));
  }
  if (ys.empty()) parse_fail(number, "no data rows");

  const auto n = static_cast<Eigen::Index>(ys.size());
  Vector y = Eigen::Map<Vector>(ys.data(), n);
  Matrix x(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, static_cast<Eigen::Index>(j)) = xs[static_cast<std::size_t>(i) * p + j];
  }
  return LogisticData::make(std::move(y), std::move(x), has_intercept);
}

LogisticData read_dataset_file(const std::string& path, bool has_intercept) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open '" + path + "'");
  return read_dataset(in, has_intercept);
}

void write_dataset(std::ostream& out, const LogisticData& data) {
  out << 'y';
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << ",x" << j + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    out << (data.y[i] > 0.5 ? '1' : '0');
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << ',' << format_double(data.x(i, j));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

Coefficients coefficients_from_fit(const Vector& theta, bool has_intercept) {
  Coefficients out;
  out.estimates = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (has_intercept && j == 0) {
      out.terms.emplace_back("(Intercept)");
    } else {
      out.terms.push_back("x" + std::to_string(has_intercept ? j : j + 1));
    }
  }
  return out;
}

void write_coefficients(std::ostream& out, const Coefficients& coefs) {
  out << "term,estimate\n";
  for (std::size_t j = 0; j < coefs.terms.size(); ++j) {
    out << coefs.terms[j] << ',' << format_double(coefs.estimates[static_cast<Eigen::Index>(j)]) << '\n';
  }
}

Coefficients read_coefficients(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  if (!next_line(in, line, number) || split(line) != std::vector<std::string>{"term", "estimate"}) {
    parse_fail(number, "expected header 'term,estimate'");
  }
  Coefficients out;
  std::vector<double> values;
  while (next_line(in, line, number)) {
    const auto fields = split(line);
    if (fields.size() != 2) parse_fail(number, "expected 2 fields");
    out.terms.push_back(fields[0]);
    values.push_back(parse_number(fields[1], number, "estimate"));
  }
  out.estimates = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return out;
}

// ---------------------------------------------------------------------------

const std::string& record_header() {
  static const std::string header =
      "point_id,kappa,gamma,rho2,psi,n,p,config,seed,replicate,exists,separated,delta0,delta1,agg_bias,agg_mse,"
      "iterations,seconds";
  return header;
}

void write_records(std::ostream& out, const std::vector<ReplicationRecord>& records) {
  out << record_header() << '\n';
  for (const auto& r : records) {
    out << r.point_id << ',' << format_double(r.kappa) << ',' << format_double(r.gamma) << ','
        << format_double(r.rho2) << ',' << format_double(r.psi) << ',' << r.n << ',' << r.p << ','
        << to_string(r.config) << ',' << r.seed << ',' << r.replicate << ',' << (r.exists ? 1 : 0) << ','
        << opt(r.separated) << ',' << opt(r.delta0) << ',' << opt(r.delta1) << ',' << opt(r.agg_bias) << ','
        << opt(r.agg_mse) << ',' << r.iterations << ',' << opt(r.seconds) << '\n';
  }
}

std::vector<ReplicationRecord> read_records(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  if (!next_line(in, line, number) || line != record_header()) parse_fail(number, "expected the record header");
  const auto columns = split(record_header());

  auto to_u64 = [&](const std::string& s, std::size_t c) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) parse_fail(number, "column '" + columns[c] + "': bad integer");
    return v;
  };
  auto to_bool = [&](const std::string& s, std::size_t c) {
    if (s != "0" && s != "1") parse_fail(number, "column '" + columns[c] + "': expected 0 or 1");
    return s == "1";
  };

  std::vector<ReplicationRecord> out;
  while (next_line(in, line, number)) {
    const auto f = split(line);
    if (f.size() != columns.size()) {
      parse_fail(number, "expected " + std::to_string(columns.size()) + " fields, found " + std::to_string(f.size()));
    }
    ReplicationRecord r;
    r.point_id = to_u64(f[0], 0);
    r.kappa = parse_number(f[1], number, columns[1]);
    r.gamma = parse_number(f[2], number, columns[2]);
    r.rho2 = parse_number(f[3], number, columns[3]);
    r.psi = parse_number(f[4], number, columns[4]);
    r.n = static_cast<int>(to_u64(f[5], 5));
    r.p = static_cast<int>(to_u64(f[6], 6));
    try {
      r.config = parse_beta_config(f[7]);
    } catch (const Error& e) {
      parse_fail(number, e.what());
    }
    r.seed = to_u64(f[8], 8);
    r.replicate = to_u64(f[9], 9);
    r.exists = to_bool(f[10], 10);
    if (f[11] != "NA") r.separated = to_bool(f[11], 11);
    r.delta0 = parse_optional(f[12], number, columns[12]);
    r.delta1 = parse_optional(f[13], number, columns[13]);
    r.agg_bias = parse_optional(f[14], number, columns[14]);
    r.agg_mse = parse_optional(f[15], number, columns[15]);
    r.iterations = static_cast<int>(to_u64(f[16], 16));
    r.seconds = parse_optional(f[17], number, columns[17]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mjpl
