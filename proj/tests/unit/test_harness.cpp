#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <functional>
#include <set>
#include <sstream>

#include "gaussperc/chem.hpp"
#include "gaussperc/config.hpp"
#include "gaussperc/critical.hpp"
#include "gaussperc/csv.hpp"
#include "gaussperc/error.hpp"
#include "gaussperc/experiments.hpp"
#include "gaussperc/plot.hpp"
#include "gaussperc/result_store.hpp"

using namespace gaussperc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gaussperc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

ExperimentConfig sample_config() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::sample;
  c.seed = 7;
  c.field.domain = 4.0;  // 16 x 16 cells at h = 0.25
  return c;
}

}  // namespace

// ---- config -----------------------------------------------------------------

TEST(Config, RoundTripIsIdentityOnBytes) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::stretch;
  c.seed = 123456789012345ull;
  c.field.kernel = KernelKind::polynomial_decay;
  c.field.beta = 4.5;
  c.field.r = 6.0;
  c.field.eps = 0.5;
  c.event.levels = {-0.1, 0.1 + 0.2, 1e-300};
  c.chem.distances = {25, 50};
  c.renorm.tail_p = 0.95;
  const std::string a = serialize(c);
  const std::string b = serialize(parse_config(a));
  EXPECT_EQ(a, b);
}

TEST(Config, RejectsEpsNotMultipleOfH) {
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"sample","field":{"h":0.25,"eps":0.3}})"); }), "eps");
}

TEST(Config, RejectsUnknownKeysByName) {
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"sample","sede":3})"); }), "sede");
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"sample","field":{"kernal":"x"}})"); }), "kernal");
}

TEST(Config, NamesOffendingFields) {
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"bogus"})"); }), "experiment");
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"sample","field":{"dim":4}})"); }), "dim");
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"sample","field":{"kernel":"polynomial-decay"}})"); }),
            "beta");
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"sample","field":{"r":0.5}})"); }), "r");
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"events","field":{"domain":10},"event":{"R":5}})"); }), "R");
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"crossing-scan","event":{"radii":[]}})"); }), "radii");
  EXPECT_EQ(field_of([] { parse_config(R"({"experiment":"sample","trials":0})"); }), "trials");
  EXPECT_EQ(field_of([] { parse_config("{not json"); }), "config");
}

TEST(Config, ExperimentNames) {
  for (const char* n : {"sample", "events", "crossing-scan", "level-scan", "chemdist", "s-tail", "renorm-scan",
                        "domination", "stretch"})
    EXPECT_EQ(to_string(experiment_from_string(n)), n);
}

// ---- csv ----------------------------------------------------------------------

TEST(Csv, ShortestRoundTripDoubles) {
  EXPECT_EQ(csv::format_double(0.1), "0.1");
  EXPECT_EQ(csv::format_double(1.0), "1");
  EXPECT_EQ(csv::format_double(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(csv::format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(csv::format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(csv::format_double(std::nan("")), "nan");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(csv::format_double(x)), x);
}

TEST(Csv, Rfc4180Quoting) {
  EXPECT_EQ(csv::format_row({"a", "b c", "d,e", "f\"g", "h\ni"}), "a,b c,\"d,e\",\"f\"\"g\",\"h\ni\"\r\n");
  const auto t = csv::parse("x,y\r\n1,\"a,\"\"b\"\r\n2,\"line\r\nbreak\"\r\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "a,\"b");
  EXPECT_EQ(t.rows[1][1], "line\r\nbreak");
  EXPECT_EQ(t.find("y"), 1);
  EXPECT_EQ(t.find("z"), -1);
  EXPECT_EQ(t.numbers("x"), (std::vector<double>{1, 2}));
  EXPECT_EQ(field_of([&] { t.numbers("z"); }), "columns");
}

TEST(Csv, WriterBytesReproducible) {
  const fs::path dir = scratch("csv");
  for (const char* name : {"a.csv", "b.csv"}) {
    csv::Writer w(dir / name, {"trial", "value", "flag", "label"});
    for (std::uint64_t i = 0; i < 50; ++i)
      w.row({i, std::sqrt(static_cast<double>(i)), i % 3 == 0, std::string(i % 2 ? "x,y" : "z")});
    w.flush();
  }
  const std::string a = slurp(dir / "a.csv");
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  EXPECT_EQ(a.substr(0, 24), "trial,value,flag,label\r\n");
  const auto t = csv::read(dir / "a.csv");
  EXPECT_EQ(t.rows.size(), 50u);
  EXPECT_EQ(std::stod(t.rows[7][1]), std::sqrt(7.0));
}

// ---- critical level ---------------------------------------------------------------

TEST(Critical, SymmetricSynthetic) {
  const std::vector<LevelPoint> scan{{-0.2, 100, 0}, {-0.1, 100, 0}, {0.0, 100, 50}, {0.1, 100, 100}, {0.2, 100, 100}};
  const auto e = estimate_critical_level(scan);
  EXPECT_NEAR(e.level, 0.0, 1e-9);
  EXPECT_LE(e.ci_low, e.level);
  EXPECT_GE(e.ci_high, e.level);
  EXPECT_GT(e.slope, 0.0);
}

TEST(Critical, TranslationEquivariant) {
  const std::vector<double> freq{0.05, 0.2, 0.45, 0.7, 0.9, 0.97};
  std::vector<LevelPoint> base;
  for (std::size_t i = 0; i < freq.size(); ++i) base.push_back({-0.25 + 0.1 * i, 400, 400 * freq[i]});
  const double at0 = estimate_critical_level(base).level;
  for (double shift : {-0.3, 0.37, 2.0}) {
    auto moved = base;
    for (auto& p : moved) p.level += shift;
    EXPECT_NEAR(estimate_critical_level(moved).level, at0 + shift, 1e-7) << shift;
  }
}

TEST(Critical, RejectsBadScans) {
  const std::vector<LevelPoint> four{{0, 10, 0}, {1, 10, 3}, {2, 10, 7}, {3, 10, 10}};
  EXPECT_EQ(field_of([&] { estimate_critical_level(four); }), "scan");
  const std::vector<LevelPoint> low{{0, 10, 0}, {1, 10, 1}, {2, 10, 2}, {3, 10, 3}, {4, 10, 4}};
  EXPECT_EQ(field_of([&] { estimate_critical_level(low); }), "scan");
}

// ---- plot -----------------------------------------------------------------------

TEST(Plot, EmptyTableSaysNoData) {
  csv::Table t;
  t.columns = {"x", "y"};
  PlotSpec s;
  s.x = "x";
  s.y = "y";
  const std::string svg = emit_plot(t, s);
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg xmlns"), std::string::npos);
  EXPECT_NE(svg.find("aria-label=\"no data\""), std::string::npos);
  EXPECT_NE(svg.find("data-role=\"no-data\""), std::string::npos);
  EXPECT_EQ(svg.find("class=\"marker\""), std::string::npos);
  EXPECT_EQ(svg.find("<text"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Plot, SinglePointMarkerAtCenter) {
  const auto t = csv::parse("x,y\r\n1,1\r\n");
  PlotSpec s;
  s.x = "x";
  s.y = "y";
  const std::string svg = emit_plot(t, s);
  const PlotArea a;
  char expect[96];
  std::snprintf(expect, sizeof expect, "<circle class=\"marker\" cx=\"%.2f\" cy=\"%.2f\" r=\"3\"",
                (a.left + a.right) / 2, (a.top + a.bottom) / 2);
  EXPECT_NE(svg.find(expect), std::string::npos) << svg.substr(0, 400);
  std::size_t n = 0;
  for (std::size_t p = svg.find("class=\"marker\""); p != std::string::npos; p = svg.find("class=\"marker\"", p + 1)) ++n;
  EXPECT_EQ(n, 1u);
}

TEST(Plot, MissingColumnNamed) {
  const auto t = csv::parse("x,y\r\n1,1\r\n");
  PlotSpec s;
  s.x = "x";
  s.y = "nope";
  try {
    emit_plot(t, s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "columns");
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
}

TEST(Plot, DeterministicWithReference) {
  const auto t = csv::parse("x_norm,q90_stretch\r\n25,1.4\r\n50,1.5\r\n100,1.55\r\n");
  const PlotSpec s = plot_spec_from_json(nlohmann::json::parse(R"({
    "x": "x_norm", "y": "q90_stretch", "log_x": true, "style": "line",
    "reference": {"kind": "stretch-threshold", "dim": 2, "delta": 0.5}})"));
  ASSERT_TRUE(s.reference.has_value());
  EXPECT_DOUBLE_EQ(s.reference->resolved_kappa(), chem::kappa_exponent(2, chem::kInfinity, 0.5));
  const std::string a = emit_plot(t, s), b = emit_plot(t, s);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("class=\"reference\""), std::string::npos);
}

// ---- result store and runs ----------------------------------------------------

TEST(RunId, IgnoresThreadsAndOutputDir) {
  ExperimentConfig a = sample_config(), b = sample_config();
  b.threads = 8;
  b.output_dir = "elsewhere";
  EXPECT_EQ(run_id(a), run_id(b));
  EXPECT_EQ(run_id(a).size(), 16u);
  b.seed = 8;
  EXPECT_NE(run_id(a), run_id(b));
}

TEST(Sha256, KnownAnswer) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ResultStore, ManifestWrittenLast) {
  const fs::path root = scratch("store");
  const ExperimentConfig c = sample_config();
  fs::path dir;
  {
    ResultStore store(root, c);
    dir = store.dir();
    store.write_text("a.txt", "hello");
    EXPECT_FALSE(fs::exists(dir / "manifest.json"));
    store.finalize();
  }
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  for (const char* k : {"run_id", "config", "code_version", "started", "finished", "artifacts"})
    EXPECT_TRUE(m.contains(k)) << k;
  ASSERT_EQ(m["artifacts"].size(), 1u);
  EXPECT_EQ(m["artifacts"][0]["path"], "a.txt");
  EXPECT_EQ(m["artifacts"][0]["sha256"], sha256_hex("hello"));
}

TEST(ResultStore, ReopenClearsPartialRun) {
  const fs::path root = scratch("partial");
  const ExperimentConfig c = sample_config();
  fs::path dir;
  {
    ResultStore store(root, c);
    dir = store.dir();
    store.write_text("stale.csv", "x");
  }
  EXPECT_FALSE(fs::exists(dir / "manifest.json"));
  ResultStore again(root, c);
  EXPECT_FALSE(fs::exists(dir / "stale.csv"));
}

TEST(Run, SampleIsByteIdenticalOnRerun) {
  const fs::path root = scratch("sample");
  const ExperimentConfig c = sample_config();
  const RunResult first = run(c, root);
  const std::string gpf = slurp(first.dir / "field.gpf");
  const std::string side = slurp(first.dir / "field.json");
  EXPECT_EQ(gpf.size(), field_grid(c.field).size() * 8 + 48);
  const RunResult second = run(c, root);
  EXPECT_EQ(first.run_id, second.run_id);
  EXPECT_EQ(slurp(second.dir / "field.gpf"), gpf);
  EXPECT_EQ(slurp(second.dir / "field.json"), side);
  const auto m = nlohmann::json::parse(slurp(second.dir / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& a : m["artifacts"]) {
    listed.insert(a["path"].get<std::string>());
    EXPECT_EQ(a["sha256"], sha256_file(second.dir / a["path"].get<std::string>()));
  }
  EXPECT_TRUE(listed.count("field.gpf") && listed.count("field.json") && listed.count("summary.json"));
}

TEST(Run, CsvArtifactsReproducible) {
  const fs::path root = scratch("events");
  ExperimentConfig c;
  c.experiment = ExperimentKind::events;
  c.seed = 3;
  c.trials = 6;
  c.field.domain = 14.0;
  c.event.R = 5.0;
  c.event.levels = {0.0, 0.5};
  const RunResult a = run(c, root);
  const std::string first = slurp(a.dir / "events.csv");
  c.threads = 3;
  const RunResult b = run(c, root);
  EXPECT_EQ(slurp(b.dir / "events.csv"), first);
  EXPECT_EQ(first.substr(0, first.find("\r\n")),
            "trial,level,exist,unique,local_uniqueness,small_clusters_below,duality_violated");
}

TEST(Run, OutputRootPrecedence) {
  ExperimentConfig c = sample_config();
  c.output_dir = "from_config";
  ::unsetenv("GAUSSPERC_OUT");
  EXPECT_EQ(resolve_output_root(c), fs::path("from_config"));
  ::setenv("GAUSSPERC_OUT", "from_env", 1);
  EXPECT_EQ(resolve_output_root(c), fs::path("from_env"));
  EXPECT_EQ(resolve_output_root(c, fs::path("from_cli")), fs::path("from_cli"));
  ::unsetenv("GAUSSPERC_OUT");
}

TEST(Run, ResourceBudgetNamesLimit) {
  ExperimentConfig c = sample_config();
  c.field.domain = 200.0;
  c.budget.max_cells = 1000;
  try {
    run(c, scratch("budget"));
    FAIL();
  } catch (const ResourceError& e) {
    EXPECT_EQ(e.limit(), "max_cells");
  }
}

TEST(JsonNumber, NonFinite) {
  EXPECT_EQ(json_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(json_number(1.5), 1.5);
}
