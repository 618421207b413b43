#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "copmix/datakit.hpp"
#include "copmix/mixture.hpp"

using namespace copmix;

namespace {

std::string tmp_path(const std::string& name) {
  return "/tmp/copmix_datakit_" + name;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string thrown_message(const std::string& path) {
  try {
    (void)read_csv(path);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

double col_mean(const Dataset& d, int label, int t) {
  double s = 0.0;
  int n = 0;
  for (int i = 0; i < d.n(); ++i) {
    if (d.labels[i] != label) continue;
    s += d.values(i, t);
    ++n;
  }
  return s / n;
}

}  // namespace

TEST_SUITE("datakit") {

TEST_CASE("csv round-trips values exactly") {
  Dataset d;
  d.values.resize(3, 2);
  d.values << 0.1, 5.0, -1.0 / 3.0, 2.0, 1e-300, 0.30000000000000004;
  d.names = {"alpha", "cnt"};
  d.domains = {ColumnDomain{false, 0}, ColumnDomain{true, 6}};
  d.values(0, 1) = 3;
  d.values(1, 1) = 0;
  d.values(2, 1) = 6;
  d.labels = {0, 2, 1};
  const std::string p = tmp_path("roundtrip.csv");
  write_csv(d, p);
  Dataset r = read_csv(p);
  REQUIRE(r.n() == 3);
  REQUIRE(r.p() == 2);
  CHECK((r.values - d.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.names == d.names);
  CHECK(r.labels == d.labels);
  CHECK_FALSE(r.domains[0].count);
  CHECK(r.domains[1].count);
  CHECK(r.domains[1].index == 6);
  std::remove(p.c_str());
}

TEST_CASE("header tags determine the column domains") {
  const std::string p = tmp_path("tags.csv");
  write_text(p, "x:cont,y:count:4,label\n0.5,3,1\n-2.25,0,0\n");
  Dataset d = read_csv(p);
  CHECK(d.p() == 2);
  CHECK_FALSE(d.domains[0].count);
  CHECK(d.domains[1].count);
  CHECK(d.domains[1].index == 4);
  CHECK(d.labels == std::vector<int>{1, 0});
  CHECK_FALSE(d.all_count());
  CHECK_FALSE(d.all_continuous());
  std::remove(p.c_str());

  // a bare column name is accepted as continuous
  write_text(p, "x,y:cont\n1,2\n");
  Dataset bare = read_csv(p);
  CHECK(bare.p() == 2);
  CHECK_FALSE(bare.domains[0].count);
  CHECK_FALSE(bare.has_labels());
  CHECK(bare.all_continuous());
  std::remove(p.c_str());
}

TEST_CASE("malformed input names the file and line") {
  const std::string p = tmp_path("bad.csv");

  write_text(p, "x:cont,y:count\n1,2\n");  // count tag without a bound
  std::string msg = thrown_message(p);
  CHECK(msg.find(p) != std::string::npos);

  write_text(p, "x:cont,y:cont\n1.0\n");  // short row
  msg = thrown_message(p);
  CHECK(msg.find(p) != std::string::npos);
  CHECK(msg.find(":2") != std::string::npos);

  write_text(p, "x:cont\nnot_a_number\n");
  msg = thrown_message(p);
  CHECK(msg.find(":2") != std::string::npos);

  write_text(p, "x:count:5\n2.5\n");  // fractional count cell
  CHECK_FALSE(thrown_message(p).empty());

  write_text(p, "x:count:5\n7\n");  // out of range count cell
  CHECK_FALSE(thrown_message(p).empty());

  write_text(p, "label\n1\n");  // no data columns
  CHECK_FALSE(thrown_message(p).empty());

  CHECK_FALSE(thrown_message(tmp_path("missing_file.csv")).empty());
  std::remove(p.c_str());
}

TEST_CASE("dataset validation checks count cells and shape") {
  Dataset d;
  d.values.resize(2, 1);
  d.values << 1.0, 2.0;
  d.names = {"x"};
  d.domains = {ColumnDomain{true, 3}};
  CHECK_NOTHROW(d.validate());
  d.values(1, 0) = 2.5;
  CHECK_THROWS(d.validate());
  d.values(1, 0) = 4.0;
  CHECK_THROWS(d.validate());
  d.values(1, 0) = -1.0;
  CHECK_THROWS(d.validate());
  d.values(1, 0) = 2.0;
  d.names = {"x", "extra"};
  CHECK_THROWS(d.validate());
  d.names = {"x"};
  d.labels = {0};
  CHECK_THROWS(d.validate());  // label length mismatch
}

TEST_CASE("mixture sampling is deterministic and labeled") {
  MixtureModel gen = example1_generator();
  Dataset a = sample_mixture(gen, 300, 42);
  Dataset b = sample_mixture(gen, 300, 42);
  Dataset c = sample_mixture(gen, 300, 43);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.labels == b.labels);
  CHECK((a.values - c.values).cwiseAbs().maxCoeff() > 0.0);
  REQUIRE(a.n() == 300);
  REQUIRE(a.p() == 2);
  CHECK(a.all_continuous());
  int seen[4] = {0, 0, 0, 0};
  for (int l : a.labels) {
    REQUIRE(l >= 0);
    REQUIRE(l < 4);
    seen[l]++;
  }
  for (int j = 0; j < 4; ++j) CHECK(seen[j] > 30);  // weights are 1/4 each
}

TEST_CASE("count mixtures sample onto their support") {
  MixtureModel gen = cognitive_analog_generator();
  Dataset d = sample_mixture(gen, 250, 5);
  CHECK(d.all_count());
  for (int t = 0; t < d.p(); ++t) {
    const int m = d.domains[t].index;
    for (int i = 0; i < d.n(); ++i) {
      const double v = d.values(i, t);
      CHECK(v == std::floor(v));
      CHECK(v >= 0.0);
      CHECK(v <= m);
    }
  }
}

TEST_CASE("four-group surrogate has the documented layout") {
  Dataset d = make_example1(7);
  REQUIRE(d.n() == 800);
  REQUIRE(d.p() == 2);
  CHECK(d.all_continuous());
  int cnt[4] = {0, 0, 0, 0};
  for (int l : d.labels) cnt[l]++;
  for (int j = 0; j < 4; ++j) CHECK(cnt[j] == 200);

  const MixtureModel gen = example1_generator();
  for (int j = 0; j < 4; ++j)
    for (int t = 0; t < 2; ++t) {
      const double mu = gen.component(j).marginals()[t].params()[0];
      CHECK(std::abs(col_mean(d, j, t) - mu) < 0.3);
    }

  // deterministic in the seed; different seeds differ
  Dataset d2 = make_example1(7);
  CHECK((d.values - d2.values).cwiseAbs().maxCoeff() == 0.0);
  Dataset d3 = make_example1(8);
  CHECK((d.values - d3.values).cwiseAbs().maxCoeff() > 0.0);

  Dataset small = make_example1(1, 25);
  CHECK(small.n() == 100);
}

TEST_CASE("count surrogate has the documented layout") {
  Dataset d = make_cognitive_analog(3);
  REQUIRE(d.n() == 536);
  REQUIRE(d.p() == 3);
  CHECK(d.all_count());
  CHECK(d.domains[0].index == 13);
  CHECK(d.domains[1].index == 8);
  CHECK(d.domains[2].index == 19);
  CHECK_NOTHROW(d.validate());
  for (int l : d.labels) {
    REQUIRE(l >= 0);
    REQUIRE(l < 6);
  }
  // generator weights are all well inside (0,1)
  const MixtureModel gen = cognitive_analog_generator();
  REQUIRE(gen.k() == 6);
  double wsum = 0.0;
  for (double w : gen.weights()) {
    CHECK(w > 0.05);
    wsum += w;
  }
  CHECK(wsum == doctest::Approx(1.0));
}

TEST_CASE("a quarter-turn rotation swaps the marginal scales") {
  std::vector<MarginalModel> mg{MarginalModel::normal(0.0, 3.0),
                                MarginalModel::normal(0.0, 0.3)};
  Component comp(CopulaModel::clayton(2.0), mg, 3.14159265358979323846 / 2.0);
  MixtureModel m({1.0}, {comp});
  Dataset d = sample_mixture(m, 4000, 9);
  double v0 = 0.0, v1 = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    v0 += d.values(i, 0) * d.values(i, 0);
    v1 += d.values(i, 1) * d.values(i, 1);
  }
  v0 /= d.n();
  v1 /= d.n();
  // z1 = x2 and z2 = -x1 at omega = pi/2, so the x-scales arrive swapped
  CHECK(std::abs(std::sqrt(v0) - 0.3) < 0.05);
  CHECK(std::abs(std::sqrt(v1) - 3.0) < 0.4);
}

}  // TEST_SUITE
