#include "martonlab/channel_io.hpp"
#include "martonlab/cli.hpp"
#include "martonlab/errors.hpp"
#include "martonlab/report.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace martonlab;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& text) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Fractions, ExactThenNormalized) {
  const auto v = parse_fraction_list("1/3,1/3,1/3");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], 1.0 / 3.0);
  const auto w = parse_fraction_list("0.8, 0.2");
  EXPECT_DOUBLE_EQ(w[1], 0.2);
  EXPECT_THROW(parse_fraction_list("1/0,1"), InputError);
  EXPECT_THROW(parse_fraction_list("a,b"), InputError);
  EXPECT_THROW(parse_fraction_list(""), InputError);
}

TEST(ChannelJson, RoundTrip) {
  const auto fx = builtin_channel("appendix_b");
  const auto text = channel_to_json(fx.channel, fx.default_px).dump(2);
  const auto back = parse_channel_json(text);
  EXPECT_EQ(back.channel.y_chan().matrix(), fx.channel.y_chan().matrix());
  EXPECT_EQ(back.channel.z_chan().matrix(), fx.channel.z_chan().matrix());
  ASSERT_TRUE(back.default_px.has_value());
  EXPECT_EQ(back.default_px->values(), fx.default_px->values());
}

TEST(ChannelJson, ErrorsCarryLineNumbers) {
  const std::string bad =
      "{\n  \"x_size\": 2,\n  \"z_given_x\": [[0.5, 0.6], [0.5, 0.5]],\n  \"y_given_x\": [[1, 0], [0, 1]]\n}\n";
  try {
    parse_channel_json(bad, "chan.json");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("chan.json:3:", 0), 0u) << e.what();
  }
  EXPECT_THROW(parse_channel_json("{\n\"x_size\": 2,\n", "x"), InputError);
}

TEST(CouplingJson, RoundTrip) {
  const std::string text = R"({"p_uv": [[0.25, 0.25], [0.25, 0.25]], "f": [[0, 0], [0, 1]]})";
  const auto c = parse_coupling_json(text);
  EXPECT_EQ(c.x_size(), 2u);
  const auto again = parse_coupling_json(coupling_to_json(c).dump());
  EXPECT_EQ(again.f(), c.f());
  EXPECT_EQ(again.p_uv(), c.p_uv());
}

TEST(Report, NineSignificantDigitsAndStableOutput) {
  EXPECT_EQ(format_number(0.5930201889), "0.593020189");
  EXPECT_EQ(round9(1.0 / 3.0), 0.333333333);
  Report r;
  r.config = {{"subcommand", "x"}, {"seed", 1}};
  r.result = {{"value", 2.0 / 3.0}, {"name", "y"}};
  EXPECT_EQ(emit(r, OutputFormat::json), emit(r, OutputFormat::json));
  const auto csv = emit(r, OutputFormat::csv);
  EXPECT_EQ(csv.rfind("# config: ", 0), 0u);
  EXPECT_NE(csv.find("value,0.666666667"), std::string::npos) << csv;
}

TEST(Cli, CounterexampleReportsViolation) {
  const auto r = run_cli({"counterexample"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["result"]["lhs"].get<double>(), 0.593020, 5e-5);
  EXPECT_NEAR(j["result"]["rhs"].get<double>(), 0.586278, 5e-5);
  EXPECT_NEAR(j["result"]["alpha"].get<double>(), 3.429517, 1e-6);
  EXPECT_EQ(j["result"]["verdict"], "inequality eq:eqg violated");
  EXPECT_TRUE(j.contains("config"));
}

TEST(Cli, BlackwellTmax) {
  const auto r = run_cli({"tmax", "--builtin", "blackwell", "--px", "1/3,1/3,1/3", "--restarts", "8"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GE(j["result"]["value"].get<double>(), 1.584963 - 1e-6);
}

TEST(Cli, GScanCsvStartsAtZero) {
  const auto r = run_cli({"bssc", "--g-scan", "--step", "0.001"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], "x,g");
  EXPECT_EQ(rows[1], "0,0");
  EXPECT_EQ(rows.size(), 502u);
}

TEST(Cli, CheckEq1FlagsBlackwell) {
  EXPECT_EQ(run_cli({"check-eq1", "--builtin", "blackwell", "--px", "1/3,1/3,1/3", "--restarts", "8"}).code,
            cli::kExitViolation);
}

TEST(Cli, OutputIsDeterministic) {
  const std::vector<std::string> args{"sumrate", "--builtin", "bssc_half"};
  EXPECT_EQ(run_cli(args).out, run_cli(args).out);
}

TEST(Cli, InvalidInputExitsTwo) {
  const auto bad = temp_file("bad_channel.json",
                             "{\n  \"x_size\": 2,\n  \"y_given_x\": [[1, 0], [0, 1]],\n"
                             "  \"z_given_x\": [[1, 0], [0.6, 0.5]]\n}\n");
  const auto r = run_cli({"info", "--channel", bad});
  EXPECT_EQ(r.code, cli::kExitInvalidInput);
  EXPECT_NE(r.err.find("bad_channel.json:4:"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"info", "--builtin", "nope"}).code, cli::kExitInvalidInput);
  EXPECT_EQ(run_cli({"tmax", "--bogus"}).code, cli::kExitInvalidInput);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitInvalidInput);
  const auto malformed = temp_file("malformed.json", "{\n  \"x_size\": 2,\n  \"y_given_x\": [[1, 0],\n");
  EXPECT_EQ(run_cli({"info", "--channel", malformed}).code, cli::kExitInvalidInput);
}

TEST(Cli, WritesToOutFile) {
  const std::string path = ::testing::TempDir() + "info_out.json";
  const auto r = run_cli({"info", "--builtin", "bssc_half", "--out", path});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_NO_THROW(nlohmann::json::parse(ss.str()));
  std::remove(path.c_str());
}
