#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ldmatrix/cli.hpp"
#include "ldmatrix/errors.hpp"
#include "ldmatrix/io.hpp"

using namespace ldmatrix;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ldmatrix_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

Json inline_finite_doc() {
  return Json{
      {"dim", 2},
      {"cone", "nonnegative_c"},
      {"norm", "one"},
      {"law",
       Json{{"type", "finite"},
            {"atoms", Json::array({Json{{"matrix", Json::array(
                                                       {Json::array({2.0, 1.0}),
                                                        Json::array({1.0, 1.0})})},
                                        {"p", 0.5}},
                                   Json{{"matrix",
                                         Json::array({Json::array({0.3, 0.2}),
                                                      Json::array({0.1, 0.4})})},
                                        {"p", 0.5}}})}}},
      {"name", "inline_pair"}};
}

}  // namespace

TEST_CASE("io: csv_number prints 17 significant digits") {
  CHECK(csv_number(1.0) == "1.0000000000000000e+00");
  CHECK(csv_number(0.5) == "5.0000000000000000e-01");
  CHECK(csv_number(-1.0 / 3.0) == "-3.3333333333333331e-01");
}

TEST_CASE("io: inline finite ensemble round-trips through json") {
  const MatrixEnsemble ens = ensemble_from_json(inline_finite_doc());
  CHECK(ens.dim == 2);
  CHECK(ens.cone == Cone::kNonnegative);
  CHECK(ens.norm == NormKind::kOne);
  REQUIRE(ens.atoms.size() == 2);
  CHECK(ens.atoms[0].a(0, 0) == 2.0);
  CHECK(ens.atoms[1].a(1, 1) == 0.4);
  CHECK(ens.name == "inline_pair");

  const MatrixEnsemble again = ensemble_from_json(ensemble_to_json(ens));
  REQUIRE(again.atoms.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(again.atoms[k].p == ens.atoms[k].p);
    CHECK((again.atoms[k].a - ens.atoms[k].a).norm() == 0.0);
  }
  CHECK(again.name == ens.name);
}

TEST_CASE("io: preset references by string and by object") {
  const MatrixEnsemble e3 = ensemble_from_json(Json("e3"));
  CHECK(e3.dim == 2);
  REQUIRE(e3.atoms.size() == 2);
  CHECK(e3.atoms[0].a(0, 0) == 2.0);

  const MatrixEnsemble logn = ensemble_from_json(
      Json{{"preset", "lognormal"}, {"m", -1.0}, {"v", 0.25}});
  CHECK(logn.law_type == LawType::kScalarLognormal);
  CHECK(logn.params.at("m") == -1.0);
  CHECK(logn.params.at("v") == 0.25);

  CHECK_THROWS_AS(ensemble_from_json(Json("no_such_preset")), ValidationError);
}

TEST_CASE("io: quadrature block is preserved for parametric laws") {
  Json doc{{"dim", 1},
           {"cone", "nonnegative_c"},
           {"law", Json{{"type", "scalar_lognormal"}, {"m", -0.5}, {"v", 1.0}}},
           {"quadrature", Json{{"count", 128}, {"seed", 5}}}};
  const MatrixEnsemble ens = ensemble_from_json(doc);
  CHECK(ens.quad_count == 128);
  CHECK(ens.quad_seed == 5);
  const Json out = ensemble_to_json(ens);
  CHECK(out.at("quadrature").at("count") == 128);
  CHECK(out.at("quadrature").at("seed") == 5);
}

TEST_CASE("io: malformed documents raise ValidationError") {
  Json bad_cone = inline_finite_doc();
  bad_cone["cone"] = "octant";
  CHECK_THROWS_AS(ensemble_from_json(bad_cone), ValidationError);

  Json bad_matrix = inline_finite_doc();
  bad_matrix["law"]["atoms"][0]["matrix"] = Json::array({Json::array({1.0})});
  CHECK_THROWS_AS(ensemble_from_json(bad_matrix), ValidationError);

  Json bad_shift = inline_finite_doc();
  bad_shift["shift"] = Json::array({1.0, 0.0, 0.0});
  CHECK_THROWS_AS(ensemble_from_json(bad_shift), ValidationError);
}

TEST_CASE("io: write_table csv emits exact full-precision bytes") {
  const fs::path dir = fresh_dir("table_csv");
  const std::string name =
      write_table(dir, "demo", {"a", "b"}, {{1.0, 2.0}, {0.25, -3.0}}, "csv");
  CHECK(name == "demo.csv");
  CHECK(slurp(dir / name) ==
        "a,b\n"
        "1.0000000000000000e+00,2.0000000000000000e+00\n"
        "2.5000000000000000e-01,-3.0000000000000000e+00\n");
  CHECK_THROWS_AS(write_table(dir, "demo", {"a"}, {{1.0, 2.0}}, "csv"),
                  ValidationError);
  CHECK_THROWS_AS(write_table(dir, "demo", {"a"}, {{1.0}}, "tsv"),
                  ValidationError);
}

TEST_CASE("io: write_table json parses back into keyed rows") {
  const fs::path dir = fresh_dir("table_json");
  const std::string name =
      write_table(dir, "demo", {"a", "b"}, {{1.0, 2.0}}, "json");
  CHECK(name == "demo.json");
  const Json back = load_json_file(dir / name);
  REQUIRE(back.is_array());
  REQUIRE(back.size() == 1);
  CHECK(back[0].at("a") == 1.0);
  CHECK(back[0].at("b") == 2.0);
}

TEST_CASE("io: load_json_file reports parse failures as ValidationError") {
  const fs::path dir = fresh_dir("garbage");
  {
    std::ofstream out(dir / "bad.json");
    out << "this is { not json";
  }
  CHECK_THROWS_WITH_AS(load_json_file(dir / "bad.json"),
                       doctest::Contains("parse error"), ValidationError);
  CHECK_THROWS_AS(load_json_file(dir / "missing.json"), ValidationError);
}

TEST_CASE("cli: run requires an explicit seed") {
  const fs::path dir = fresh_dir("no_seed");
  RunConfig cfg;
  cfg.command = "spectral";
  cfg.config = Json{{"ensemble", "two_point"}, {"s_grid", Json::array({1.0})},
                    {"resolution", 1}};
  cfg.seed_set = false;
  cfg.output_dir = dir;
  CHECK(run(cfg) == 2);
  const Json manifest = load_json_file(dir / "manifest.json");
  CHECK(manifest.at("status") == "validation_error");
  CHECK(manifest.at("artifacts").empty());
}

TEST_CASE("cli: spectral pipeline writes data plus manifest, and reruns are "
          "byte-identical across thread counts") {
  const Json config{{"ensemble", "two_point"},
                    {"s_grid", Json::array({0.0, 1.0, 2.0})},
                    {"resolution", 1}};
  const fs::path dir_a = fresh_dir("spectral_a");
  const fs::path dir_b = fresh_dir("spectral_b");
  RunConfig cfg;
  cfg.command = "spectral";
  cfg.config = config;
  cfg.seed = 1;
  cfg.seed_set = true;
  cfg.output_dir = dir_a;
  cfg.threads = 1;
  REQUIRE(run(cfg) == 0);
  cfg.output_dir = dir_b;
  cfg.threads = 2;
  REQUIRE(run(cfg) == 0);

  CHECK(slurp(dir_a / "k_profile.csv") == slurp(dir_b / "k_profile.csv"));
  CHECK(slurp(dir_a / "profiles.json") == slurp(dir_b / "profiles.json"));

  const Json manifest = load_json_file(dir_a / "manifest.json");
  CHECK(manifest.at("status") == "ok");
  const auto& artifacts = manifest.at("artifacts");
  REQUIRE(artifacts.size() == 2);
  CHECK(artifacts[0] == "k_profile.csv");
  CHECK(artifacts[1] == "profiles.json");

  // k(2) = 0.2*4 + 0.8*0.25 = 1 exactly for the two-point law.
  const Json profiles = load_json_file(dir_a / "profiles.json");
  REQUIRE(profiles.size() == 3);
  CHECK(std::abs(profiles[2].at("log_k").get<double>()) < 1e-12);
}

TEST_CASE("cli: json format switches the table artifact") {
  const fs::path dir = fresh_dir("spectral_json");
  RunConfig cfg;
  cfg.command = "spectral";
  cfg.config = Json{{"ensemble", "two_point"}, {"s_grid", Json::array({1.0})},
                    {"resolution", 1}};
  cfg.seed = 1;
  cfg.seed_set = true;
  cfg.output_dir = dir;
  cfg.format = "json";
  REQUIRE(run(cfg) == 0);
  CHECK(fs::exists(dir / "k_profile.json"));
  CHECK_FALSE(fs::exists(dir / "k_profile.csv"));
}

TEST_CASE("cli: unattainable drift target exits 3 with no data files") {
  const fs::path dir = fresh_dir("drift");
  RunConfig cfg;
  cfg.command = "ldp";
  cfg.config = Json{{"ensemble", "two_point"},
                    {"n", Json::array({5})},
                    {"q", 2.0},
                    {"paths", 200},
                    {"resolution", 1}};
  cfg.seed = 1;
  cfg.seed_set = true;
  cfg.output_dir = dir;
  CHECK(run(cfg) == 3);
  const Json manifest = load_json_file(dir / "manifest.json");
  CHECK(manifest.at("status") == "numerical_error");
  CHECK(manifest.at("error").get<std::string>().find("DriftUnattainable") !=
        std::string::npos);
  CHECK_FALSE(fs::exists(dir / "ldp.csv"));
}

TEST_CASE("cli: partial artifacts are removed when a later stage fails") {
  const fs::path dir = fresh_dir("cleanup");
  RunConfig cfg;
  cfg.command = "edgeworth";
  // paths < 100 violates the edgeworth_curve precondition AFTER bias.json
  // has already been written; the failed run must clean it up.
  cfg.config = Json{{"ensemble", "two_point"},
                    {"n", Json::array({10})},
                    {"s", 1.0},
                    {"paths", 10},
                    {"resolution", 1}};
  cfg.seed = 1;
  cfg.seed_set = true;
  cfg.output_dir = dir;
  CHECK(run(cfg) == 2);
  CHECK_FALSE(fs::exists(dir / "bias.json"));
  const Json manifest = load_json_file(dir / "manifest.json");
  CHECK(manifest.at("status") == "validation_error");
  CHECK(manifest.at("artifacts").empty());
}

TEST_CASE("cli: unknown command and config type errors exit 2") {
  const fs::path dir = fresh_dir("unknown");
  RunConfig cfg;
  cfg.command = "frobnicate";
  cfg.config = Json::object();
  cfg.seed = 1;
  cfg.seed_set = true;
  cfg.output_dir = dir;
  CHECK(run(cfg) == 2);

  cfg.command = "spectral";
  cfg.config = Json{{"ensemble", "two_point"}, {"s_grid", "oops"}};
  CHECK(run(cfg) == 2);  // type error in the config document
}
