#include <gtest/gtest.h>

#include <sstream>

#include "lqmfg/config.hpp"
#include "lqmfg/errors.hpp"

namespace lqmfg {
namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

TEST(Config, MatrixSyntax) {
  const Matrix m = parse_matrix(" 1, 2 ; 3,4 ");
  ASSERT_EQ(m.rows(), 2);
  EXPECT_EQ(m(1, 0), 3.0);
  EXPECT_THROW(parse_matrix("1,2;3"), InvalidProblem);
  EXPECT_THROW(parse_matrix("1,a"), InvalidProblem);
}

TEST(Config, FullProblem) {
  const Config c = parse(R"(
# comment
[problem]
n = 2
m = 1
T = 2   # horizon
x0_mean = 1, -1
[A]
at 0 = 1,0;0,1
at 0.5 = 2,0;0,2
[B]
const = 0;1
[R]
const = 3
[QT]
const = 1,0;0,1
[Qcal]
const = 1,0;0,2
[appendix]
gamma = -5
T = 10
[simulation]
N = 10, 20, 40
paths = 7
seed = 3
dt = 0.5
x0_cov = 0.25,0;0,0.25
)");
  EXPECT_EQ(c.spec.n, 2);
  EXPECT_EQ(c.spec.T, 2.0);
  EXPECT_EQ(c.spec.x0_mean(1), -1.0);
  EXPECT_EQ(c.spec.A.pieces().size(), 2u);
  EXPECT_EQ(c.spec.A.at(1.0)(0, 0), 2.0);
  EXPECT_EQ(c.spec.R.at(0)(0, 0), 3.0);
  EXPECT_EQ(c.spec.Q.at(0).norm(), 0.0);
  ASSERT_TRUE(c.Qcal);
  EXPECT_EQ((*c.Qcal)(1, 1), 2.0);
  ASSERT_TRUE(c.appendix);
  EXPECT_EQ(c.appendix->gamma, -5.0);
  EXPECT_EQ(c.appendix->b, 1.0);
  ASSERT_TRUE(c.simulation);
  EXPECT_EQ(c.simulation->N_values, (std::vector<int>{10, 20, 40}));
  EXPECT_EQ(c.simulation->paths, 7);
  EXPECT_EQ(c.simulation->x0_cov(0, 0), 0.25);
  EXPECT_TRUE(validate(c.spec).ok());
}

TEST(Config, LineNumberedDiagnostics) {
  EXPECT_EQ(error_line("[problem]\nn = 1\nm = 1\nT = x\n[R]\nconst = 1\n"), 4);
  EXPECT_EQ(error_line("[problem]\nn=1\nm=1\nT=1\n[R]\nconst = 1\n[Foo]\n"), 7);
  EXPECT_EQ(error_line("[problem]\nn=1\nm=1\nT=1\n[R]\nconst = 1\nat 0 = 2\n"), 7);
  EXPECT_EQ(error_line("[problem]\nn=1\nm=1\nT=1\nbogus=2\n[R]\nconst = 1\n"), 5);
  EXPECT_EQ(error_line("n = 1\n"), 1);
  EXPECT_EQ(error_line("[problem]\nn=1\nm=1\nT=1\n[A]\nat 0.5 = 1\n[R]\nconst=1\n"), 6);
}

TEST(Config, MissingRequiredSections) {
  EXPECT_THROW(parse("[R]\nconst = 1\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\nn=1\nm=1\nT=1\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

}  // namespace
}  // namespace lqmfg
