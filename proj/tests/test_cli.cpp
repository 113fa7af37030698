#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <expat.h>
#include <gtest/gtest.h>

#include "dehnfill/config.hpp"
#include "dehnfill/lpfill.hpp"

using namespace dehnfill;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Result cli(const std::string& args) {
  const std::string cmd = std::string(DEHNFILL_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(DEHNFILL_CONFIGS) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool well_formed_xml(const std::string& text) {
  XML_Parser p = XML_ParserCreate(nullptr);
  const bool ok = XML_Parse(p, text.data(), static_cast<int>(text.size()), 1) == XML_STATUS_OK;
  XML_ParserFree(p);
  return ok;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("dehnfill_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

TEST(ParseConfig, Valid) {
  const auto c = parse_config("space = H2xH2\nexperiment = flat_round_spheres\nk = 1");
  EXPECT_EQ(c.space, "H2xH2");
  EXPECT_EQ(c.spec.family, Family::FlatRoundSpheres);
  EXPECT_EQ(c.spec.k, 1);
  EXPECT_EQ(c.name, "flat_round_spheres");
}

TEST(ParseConfig, CommentsAndLists) {
  const auto c = parse_config(
      "# comment\nspace = H2   # trailing\nexperiment = lemma2_spheres\nschedule = 2, 3 4,5\n"
      "filler = cone\nlp_mode = rational\ncap_strategy = lp_fill\ncap_level = -12\nseed = 9\n");
  EXPECT_EQ(c.spec.schedule, (std::vector<double>{2, 3, 4, 5}));
  EXPECT_EQ(c.spec.filler, Filler::Cone);
  EXPECT_EQ(c.spec.lp_mode, LpMode::Rational);
  EXPECT_EQ(c.spec.cap_strategy, CapStrategy::LpFill);
  EXPECT_EQ(*c.spec.cap_level, -12.0);
  EXPECT_EQ(c.spec.seed, 9u);
}

TEST(ParseConfig, UnresolvableSpaceNamesTheToken) {
  try {
    parse_config("space = H5xQ\nexperiment = lemma2_spheres\n");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("line 1"), std::string::npos) << m;
    EXPECT_NE(m.find("'Q'"), std::string::npos) << m;
  }
}

TEST(ParseConfig, DuplicateKeyNamesBothLines) {
  try {
    parse_config("space = H2\nk = 1\nexperiment = lemma2_spheres\nk = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "duplicate key 'k' on lines 2 and 4");
  }
}

TEST(ParseConfig, UnknownKeyAndMalformedLine) {
  try {
    parse_config("space = H2\n\nradius = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "line 3: unknown key 'radius'");
  }
  EXPECT_THROW(parse_config("space H2\n"), ConfigError);
  EXPECT_THROW(parse_config("space = \n"), ConfigError);
  EXPECT_THROW(parse_config("space = H2\n"), ConfigError);
  EXPECT_THROW(parse_config("experiment = lemma2_spheres\n"), ConfigError);
  EXPECT_THROW(parse_config("space = H2\nexperiment = lemma2_spheres\nk = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config("space = H2\nexperiment = lemma2_spheres\nmesh = fine\n"), ConfigError);
  EXPECT_THROW(parse_config("space = H2\nexperiment = blobs\n"), ConfigError);
}

TEST_F(Cli, FlatCirclesBelowRank) {
  const auto r = cli("exponent --config " + config("flat_circles_h2xh2.conf") + " --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(std::regex_search(r.out, std::regex("expected 2, measured [0-9.]+, verdict matches_euclidean"))) << r.out;
  const auto csv = slurp(dir / "flat_circles_h2xh2.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "size,cycle_volume,fill_volume");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_TRUE(well_formed_xml(slurp(dir / "flat_circles_h2xh2.svg")));
}

TEST_F(Cli, ConeCirclesAboveRank) {
  const auto r = cli("exponent --config " + config("cone_circles_h2.conf") + " --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("verdict matches_linear"), std::string::npos) << r.out;
  EXPECT_TRUE(well_formed_xml(slurp(dir / "cone_circles_h2.svg")));
}

TEST_F(Cli, ShortScheduleFails) {
  const auto r = cli("exponent --config " + config("short_schedule.conf") + " --out " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("schedule too short"), std::string::npos) << r.out;
}

TEST_F(Cli, MismatchExitsTwo) {
  std::ofstream(dir / "tight.conf") << "space = H2\nexperiment = lemma2_spheres\nschedule = 2, 3, 4\n"
                                       "filler = cone\nmesh = 0.5\ntolerance = 0.0001\n";
  const auto r = cli("exponent --config " + (dir / "tight.conf").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("verdict mismatch"), std::string::npos);
}

TEST_F(Cli, BadConfigExitsOne) {
  std::ofstream(dir / "bad.conf") << "space = H2\nexperiment = lemma2_spheres\nwidth = 2\n";
  const auto r = cli("exponent --config " + (dir / "bad.conf").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("line 3: unknown key 'width'"), std::string::npos) << r.out;
  EXPECT_NE(cli("exponent --config " + (dir / "missing.conf").string()).code, 0);
  EXPECT_NE(cli("").code, 0);
}

TEST_F(Cli, DeterministicCsv) {
  const auto a = dir / "a", b = dir / "b";
  ASSERT_EQ(cli("exponent --config " + config("tubes_h2.conf") + " --seed 3 --out " + a.string()).code, 0);
  ASSERT_EQ(cli("exponent --config " + config("tubes_h2.conf") + " --seed 3 --out " + b.string()).code, 0);
  EXPECT_EQ(slurp(a / "tubes_h2.csv"), slurp(b / "tubes_h2.csv"));
  EXPECT_FALSE(slurp(a / "tubes_h2.csv").empty());
}

TEST_F(Cli, MeshOverride) {
  const auto a = dir / "a", b = dir / "b";
  ASSERT_EQ(cli("exponent --config " + config("tubes_h2.conf") + " --out " + a.string()).code, 0);
  ASSERT_EQ(cli("exponent --config " + config("tubes_h2.conf") + " --mesh 1 --out " + b.string()).code, 0);
  EXPECT_NE(slurp(a / "tubes_h2.csv"), slurp(b / "tubes_h2.csv"));
}

TEST_F(Cli, ConeReport) {
  const auto r = cli("cone --config " + config("cone_circles_h2.conf") + " --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("size 2: cycle"), std::string::npos) << r.out;
  const auto csv = slurp(dir / "cone_circles_h2_cone.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "R_or_size,cycle_volume,cone_volume,cap_volume,total_volume,measured_decay");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

TEST_F(Cli, Jacobi) {
  const auto r = cli("jacobi --roots A2 --t 2");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("rho_star 0.7071067812"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\n2 1 1.414213562"), std::string::npos) << r.out;
  EXPECT_EQ(cli("jacobi --roots E8").code, 1);
}

TEST_F(Cli, LpFillFromFiles) {
  const auto g = square_grid(6);
  const auto z = rectangle_loop(g, 0, 1, {0, 0}, 1, 1, 4, 4);
  {
    std::ofstream cx(dir / "grid.cx");
    write_complex(cx, g);
    std::ofstream cy(dir / "loop.cy");
    write_cycle(cy, 1, z);
  }
  const auto r = cli("lpfill --complex " + (dir / "grid.cx").string() + " --cycle " + (dir / "loop.cy").string() +
                     " --mode rational");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("value 9\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("exact 9\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("integral yes"), std::string::npos) << r.out;
  EXPECT_EQ(cli("lpfill --complex " + (dir / "grid.cx").string() + " --cycle " + (dir / "loop.cy").string() +
                " --mode fast")
                .code,
            1);
}
