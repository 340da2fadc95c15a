#include <doctest.h>

#include <sstream>

#include "mjpl/io.hpp"

using namespace mjpl;

namespace {

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    read_dataset(in, true);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
    return e.what();
  }
  FAIL("parsed: " << text);
  return {};
}

}  // namespace

TEST_CASE("dataset round trip") {
  std::istringstream in("# a comment\ny,x1,x2\n1,0.5,-2\n0,1e-3,3.25\n\n1,2,0\n");
  const auto data = read_dataset(in, true);
  CHECK(data.n() == 3);
  CHECK(data.x.cols() == 2);
  CHECK(data.x(1, 0) == 1e-3);
  CHECK(data.y[1] == 0.0);

  std::ostringstream out;
  write_dataset(out, data);
  CHECK(out.str() == "y,x1,x2\n1,0.5,-2\n0,0.001,3.25\n1,2,0\n");
  std::istringstream back(out.str());
  CHECK(read_dataset(back, true).x == data.x);
}

TEST_CASE("intercept-only dataset") {
  std::istringstream in("y\n1\n0\n0\n");
  const auto data = read_dataset(in, true);
  CHECK(data.x.cols() == 0);
  CHECK(data.n_coefficients() == 1);
}

TEST_CASE("parse errors name the line") {
  CHECK(parse_error("y,x1\n1,2\n0,abc\n").find("line 3") != std::string::npos);
  CHECK(parse_error("y,x1\n1,2\n2,1\n").find("line 3") != std::string::npos);
  CHECK(parse_error("y,x1\n1,2,3\n").find("line 2") != std::string::npos);
  CHECK(parse_error("x1,y\n1,2\n").find("line 1") != std::string::npos);
  CHECK(parse_error("y,x2\n1,2\n").find("line 1") != std::string::npos);
  CHECK(parse_error("y,x1\n").find("no data") != std::string::npos);
  CHECK(parse_error("y,x1\n1,inf\n").find("line 2") != std::string::npos);
}

TEST_CASE("coefficient files") {
  Vector theta(3);
  theta << -0.5, 1.25, 2.0;
  const auto coefs = coefficients_from_fit(theta, true);
  CHECK(coefs.terms == std::vector<std::string>{"(Intercept)", "x1", "x2"});
  std::ostringstream out;
  write_coefficients(out, coefs);
  CHECK(out.str() == "term,estimate\n(Intercept),-0.5\nx1,1.25\nx2,2\n");
  std::istringstream in("# b1=-1\n" + out.str());
  const auto back = read_coefficients(in);
  CHECK(back.terms == coefs.terms);
  CHECK(back.estimates == theta);
  CHECK(coefficients_from_fit(theta, false).terms[0] == "x1");
}

TEST_CASE("record files round trip") {
  ReplicationRecord r;
  r.point_id = 7;
  r.kappa = 0.22;
  r.gamma = 8;
  r.rho2 = 0.1;
  r.n = 2000;
  r.p = 440;
  r.config = BetaConfig::u1;
  r.seed = 42;
  r.replicate = 3;
  r.exists = false;
  r.separated = true;
  r.delta1 = 0.123456789012;
  r.agg_bias = -0.5;
  r.iterations = 12;
  std::ostringstream out;
  write_records(out, {r});
  const std::string text = out.str();
  CHECK(text.substr(0, text.find('\n')) == record_header());
  CHECK(text.find("7,0.22,8,0.1,0,2000,440,u1,42,3,0,1,NA,0.123456789,-0.5,NA,12,NA\n") != std::string::npos);

  std::istringstream in(text);
  const auto back = read_records(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].config == BetaConfig::u1);
  CHECK(*back[0].separated);
  CHECK_FALSE(back[0].delta0.has_value());
  CHECK(*back[0].delta1 == doctest::Approx(0.123456789));

  std::istringstream broken(record_header() + "\n1,2\n");
  CHECK_THROWS_AS(read_records(broken), Error);
}

TEST_CASE("metadata lines") {
  OutputMeta meta;
  meta.seed = 9;
  meta.extra.push_back({"command", "fit"});
  std::ostringstream out;
  write_meta(out, meta);
  CHECK(out.str() == "# b0=-0.033 b1=-1.172 b2=-1.869 b3=0.817\n# seed=9\n# tol=0.001 max_iter=300\n# command=fit\n");
  CHECK(format_double(0.1 + 0.2) == "0.3");
  CHECK(format_double(std::nan("")) == "NA");
}
