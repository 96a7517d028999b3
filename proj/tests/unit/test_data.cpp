#include <gtest/gtest.h>

#include <boost/math/special_functions/lambert_w.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "bitkernel/data.hpp"
#include "bitkernel/errors.hpp"

using namespace bitkernel;
using namespace bitkernel::data;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bitkernel_data_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(Targets, Arity) {
  const std::vector<std::pair<const char*, std::size_t>> expected = {
      {"f1", 5}, {"f2", 4}, {"f3", 3}, {"f4", 4}, {"f5", 4}, {"f6", 4}};
  for (const auto& [name, arity] : expected) {
    EXPECT_EQ(TargetFunction::by_name(name).arity(), arity);
    EXPECT_EQ(TargetFunction::by_name(name).name(), name);
  }
  EXPECT_EQ(TargetFunction::custom("x").arity(), 1u);
  EXPECT_THROW(TargetFunction::by_name("f7"), InvalidInputError);
}

TEST(Targets, Examples) {
  const auto f1 = TargetFunction::by_name("f1");
  const auto f2 = TargetFunction::by_name("f2");
  const auto f3 = TargetFunction::by_name("f3");
  EXPECT_EQ(eval_target(f1, std::vector<double>(5, 0.0)), 1.0);
  EXPECT_EQ(eval_target(f3, std::vector<double>{0.5, 0.5, 0.25}), 0.0);
  EXPECT_EQ(eval_target(f2, std::vector<double>(4, 0.0)), -1.0);
}

TEST(Targets, FormulasAgainstDirectEvaluation) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> uni(-1, 1);
  const double pi = std::numbers::pi;
  for (int trial = 0; trial < 200; ++trial) {
    double a[5];
    for (double& v : a) v = uni(gen);
    const std::vector<double> v5(a, a + 5), v4(a, a + 4), v3(a, a + 3);
    double s = 0;
    for (double v : a) s += std::pow(std::sin(pi * v / 2), 2);
    EXPECT_NEAR(TargetFunction::by_name("f1")(v5), std::exp(s / 5), 1e-14);
    EXPECT_NEAR(TargetFunction::by_name("f2")(v4),
                std::log(1 + std::abs(a[0])) + a[1] * a[1] - a[1] + std::sin(a[2]) - std::exp(a[3]),
                1e-14);
    EXPECT_NEAR(TargetFunction::by_name("f3")(v3), a[0] * a[1] - a[2], 1e-15);
    EXPECT_NEAR(TargetFunction::by_name("f4")(v4),
                a[0] * std::sin(a[1]) + std::cos(a[2]) - 0.5 * a[3], 1e-14);
    EXPECT_NEAR(TargetFunction::by_name("f5")(v4),
                a[0] * a[0] / (1 + std::abs(a[1])) - std::exp(a[2]) + std::tanh(a[3]) +
                    std::sqrt(std::abs(a[0] * a[2])),
                1e-14);
    if (a[0] * a[1] >= -1 / std::numbers::e && a[1] != 0) {
      const double ref = boost::math::lambert_w0(a[0] * a[1]) + a[2] / std::log(1 + std::exp(a[3])) -
                         std::tgamma(a[1]) / (1 + std::abs(a[0]));
      EXPECT_NEAR(TargetFunction::by_name("f6")(v4), ref, 1e-9 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(Targets, Errors) {
  const auto f6 = TargetFunction::by_name("f6");
  EXPECT_THROW(f6(std::vector<double>{1.0, -0.5, 0, 0}), DomainError);
  EXPECT_THROW(f6(std::vector<double>{0.1, 0.0, 0, 0}), PoleError);
  EXPECT_THROW(f6(std::vector<double>{0.1, -2.0, 0, 0}), PoleError);
  EXPECT_THROW(TargetFunction::by_name("f3")(std::vector<double>{1, 2}), DimensionError);
  EXPECT_THROW(TargetFunction::by_name("f3")(std::vector<double>{1, NAN, 2}), InvalidInputError);
}

TEST(Targets, CustomExpression) {
  const auto fn = TargetFunction::custom("2*sin(x)^2 - abs(x)/pi + e^-x");
  const double x = 0.7;
  EXPECT_NEAR(fn(std::vector<double>{x}),
              2 * std::pow(std::sin(x), 2) - x / std::numbers::pi + std::exp(-x), 1e-15);
  EXPECT_EQ(TargetFunction::custom("-2^2")(std::vector<double>{0}), -4.0);
  EXPECT_EQ(TargetFunction::custom("2^3^2")(std::vector<double>{0}), 512.0);
  EXPECT_EQ(TargetFunction::custom("1 - 2 - 3")(std::vector<double>{0}), -4.0);
  EXPECT_EQ(TargetFunction::custom("8 / 4 / 2")(std::vector<double>{0}), 1.0);
  EXPECT_EQ(TargetFunction::custom("1.5e2 * x")(std::vector<double>{2}), 300.0);
  try {
    TargetFunction::custom("sin(x");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW(TargetFunction::custom("foo(x)"), ParseError);
  EXPECT_THROW(TargetFunction::custom("x +"), ParseError);
  EXPECT_THROW(TargetFunction::custom("x y"), ParseError);
  EXPECT_THROW(TargetFunction::custom(""), ParseError);
}

TEST(LambertW, KnownValues) {
  EXPECT_EQ(lambert_w(0.0), 0.0);
  EXPECT_NEAR(lambert_w(std::numbers::e), 1.0, 1e-15);
  // Newton oracle on w·e^w = 1.
  double w = 0.5;
  for (int k = 0; k < 50; ++k) w -= (w * std::exp(w) - 1) / (std::exp(w) * (w + 1));
  EXPECT_NEAR(lambert_w(1.0), w, 1e-15);
  EXPECT_NEAR(lambert_w(1.0), 0.5671432904, 1e-10);
  EXPECT_NEAR(lambert_w(-1 / std::numbers::e), -1.0, 1e-7);
  EXPECT_THROW(lambert_w(-0.5), DomainError);
}

TEST(LambertW, DefiningIdentity) {
  std::mt19937_64 gen(4);
  const double lo = -1 / std::numbers::e + 1e-6;
  std::uniform_real_distribution<double> uni(lo, 10.0);
  for (int k = 0; k < 10000; ++k) {
    const double z = uni(gen);
    const double w = lambert_w(z);
    EXPECT_LE(std::abs(w * std::exp(w) - z), 1e-12 * std::max(1.0, std::abs(z))) << z;
    EXPECT_GE(w, -1.0);
  }
  for (double z : {1e-300, 1e-10, 50.0, 1e6, 1e100}) {
    EXPECT_NEAR(lambert_w(z), boost::math::lambert_w0(z), 1e-14 * std::max(1.0, boost::math::lambert_w0(z)));
  }
}

TEST(Gamma, KnownValues) {
  EXPECT_NEAR(gamma_fn(1.0), 1.0, 1e-15);
  EXPECT_NEAR(gamma_fn(5.0), 24.0, 24e-10);
  EXPECT_NEAR(gamma_fn(0.5), std::sqrt(std::numbers::pi), 1e-10);
  EXPECT_NEAR(gamma_fn(1.5), 0.5 * std::sqrt(std::numbers::pi), 1e-10);
  EXPECT_NEAR(gamma_fn(1.5), 0.8862269255, 1e-10);
  EXPECT_THROW(gamma_fn(0.0), PoleError);
  EXPECT_THROW(gamma_fn(-3.0), PoleError);
}

TEST(Gamma, AgreesWithStdAndRecurrence) {
  for (double z = 0.5; z <= 20.0; z += 0.0137) {
    EXPECT_NEAR(gamma_fn(z), std::tgamma(z), 1e-10 * std::tgamma(z)) << z;
  }
  for (double z = 0.5; z <= 10.0; z += 0.01) {
    EXPECT_NEAR(gamma_fn(z + 1), z * gamma_fn(z), 1e-9 * z * gamma_fn(z));
  }
  for (double z : {-0.5, -1.5, -2.25, 0.01, -0.99}) {
    EXPECT_NEAR(gamma_fn(z), std::tgamma(z), 1e-10 * std::abs(std::tgamma(z))) << z;
  }
}

TEST(Generate, DeterministicBox) {
  const auto fn = TargetFunction::by_name("f3");
  const auto a = generate_dataset(fn, 100, 1, SampleMode::box);
  EXPECT_EQ(a, generate_dataset(fn, 100, 1, SampleMode::box));
  EXPECT_NE(a, generate_dataset(fn, 100, 2, SampleMode::box));
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a.dim(), 3u);
  EXPECT_EQ(a.meta.target, "f3");
  for (double v : a.x.data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.y[i], fn(a.x.row(i)));
}

TEST(Generate, UnitNormContract) {
  for (const char* name : {"f1", "f2", "f3", "f4", "f5", "f6"}) {
    const auto ds = generate_dataset(TargetFunction::by_name(name), 200, 7, SampleMode::unit_norm);
    double peak = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      double sq = 0;
      for (double v : ds.x.row(i)) sq += v * v;
      EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
      EXPECT_LE(std::abs(ds.y[i]), 1.0);
      peak = std::max(peak, std::abs(ds.y[i]));
    }
    EXPECT_EQ(peak, 1.0) << name;
  }
}

TEST(Generate, F1Range) {
  const auto ds = generate_dataset(TargetFunction::by_name("f1"), 1000, 3, SampleMode::box);
  for (double y : ds.y) {
    EXPECT_GE(y, 1.0);
    EXPECT_LE(y, std::numbers::e);
  }
}

TEST(Generate, F6RejectionSampling) {
  const auto ds = generate_dataset(TargetFunction::by_name("f6"), 500, 5, SampleMode::box);
  EXPECT_GT(ds.meta.rejections, 0u);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_GE(ds.x(i, 0) * ds.x(i, 1), -1 / std::numbers::e);
    EXPECT_TRUE(std::isfinite(ds.y[i]));
  }
  EXPECT_THROW(generate_dataset(TargetFunction::by_name("f3"), 0, 1, SampleMode::box),
               InvalidInputError);
  // An expression that is never finite exhausts the attempt budget.
  EXPECT_THROW(generate_dataset(TargetFunction::custom("log(-1 - x^2)"), 5, 1, SampleMode::box),
               DomainError);
}

TEST(Split, IndependentMode) {
  const auto fn = TargetFunction::by_name("f4");
  const auto ds = generate_dataset(fn, 100, 9, SampleMode::unit_norm);
  const auto [train, test] = split(ds, 40, 9);
  EXPECT_EQ(train, ds);
  EXPECT_EQ(test.size(), 40u);
  EXPECT_EQ(test.meta.n, 40u);
  EXPECT_EQ(test.meta.target, ds.meta.target);
  std::set<std::vector<double>> rows;
  for (std::size_t i = 0; i < train.size(); ++i) rows.insert({train.x.row(i).begin(), train.x.row(i).end()});
  for (std::size_t i = 0; i < test.size(); ++i) {
    EXPECT_FALSE(rows.contains({test.x.row(i).begin(), test.x.row(i).end()}));
    EXPECT_EQ(test.y[i], fn(test.x.row(i)) / ds.meta.y_scale);
  }
  EXPECT_EQ(split(ds, 40, 9).second, test);
}

TEST(Split, HoldoutMode) {
  const auto ds = generate_dataset(TargetFunction::by_name("f3"), 100, 2, SampleMode::box);
  const auto [train, test] = split(ds, 20, 5, SplitMode::holdout);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(test.size(), 20u);
  std::multiset<double> all(ds.y.begin(), ds.y.end());
  std::multiset<double> parts(train.y.begin(), train.y.end());
  parts.insert(test.y.begin(), test.y.end());
  EXPECT_EQ(all, parts);
  EXPECT_EQ(split(ds, 20, 5, SplitMode::holdout).first, train);
  EXPECT_THROW(split(ds, 100, 5, SplitMode::holdout), InvalidInputError);
  EXPECT_THROW(split(ds, 0, 5), InvalidInputError);
}

TEST(Persist, RoundTrip) {
  const auto dir = temp_dir("roundtrip");
  for (const char* name : {"f1", "f6"}) {
    const auto ds = generate_dataset(TargetFunction::by_name(name), 57, 11, SampleMode::unit_norm);
    const auto path = dir / (std::string(name) + ".csv");
    persist_dataset(ds, path);
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string(name) + ".meta.json")));
    EXPECT_EQ(load_dataset(path), ds);
  }
  const auto custom = generate_dataset(TargetFunction::custom("sin(5*x)"), 10, 1, SampleMode::box);
  persist_dataset(custom, dir / "c.csv");
  const auto back = load_dataset(dir / "c.csv");
  EXPECT_EQ(back, custom);
  EXPECT_EQ(target_of(back.meta).expression(), "sin(5*x)");
}

TEST(Persist, ParseErrors) {
  const auto dir = temp_dir("errors");
  write_file(dir / "bad_header.csv", "a,b,y\n1,2,3\n");
  EXPECT_THROW(load_dataset(dir / "bad_header.csv"), ParseError);

  write_file(dir / "short_row.csv", "x0,x1,x2,y\n1,2,3,4\n1,2,3\n");
  try {
    load_dataset(dir / "short_row.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }

  write_file(dir / "bad_number.csv", "x0,y\n1,abc\n");
  EXPECT_THROW(load_dataset(dir / "bad_number.csv"), ParseError);
  EXPECT_THROW(load_dataset(dir / "missing.csv"), IoError);
}
