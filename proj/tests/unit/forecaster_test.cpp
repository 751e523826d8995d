#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "foresight/errors.hpp"
#include "foresight/forecaster.hpp"
#include "support/mock_server.hpp"

using namespace foresight;

namespace {

// "w<i>_<j>" words, n of them.
std::string words(int n, int tag) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += "w" + std::to_string(tag) + "_" + std::to_string(i);
  }
  return out;
}

// Simpson's rule for E[sigmoid(z)], z ~ N(m, s), written independently of the
// library quadrature.
double simpson_expected(double m, double s) {
  const int n = 4000;
  const double lo = m - 10 * s, hi = m + 10 * s, h = (hi - lo) / n;
  double acc = 0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double f = 1.0 / (1.0 + std::exp(-z)) * std::exp(-0.5 * std::pow((z - m) / s, 2)) /
                     (s * std::sqrt(2 * std::numbers::pi));
    acc += f * (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2));
  }
  return acc * h / 3;
}

}  // namespace

TEST(Truncate, ThreeTenUnitNotesBudgetTwentyFive) {
  const std::vector<std::string> notes{words(10, 0), words(10, 1), words(10, 2)};
  const auto out = truncate_context(notes, {25, BudgetUnit::whitespace_tokens});
  EXPECT_EQ(out, notes[1] + "\n\n" + notes[2]);
}

TEST(Truncate, BudgetLargerThanTotalKeepsEverything) {
  const std::vector<std::string> notes{"a b", "c d e", "f"};
  EXPECT_EQ(truncate_context(notes, {100, BudgetUnit::whitespace_tokens}), "a b\n\nc d e\n\nf");
  EXPECT_EQ(truncate_context(notes, {100, BudgetUnit::characters}), "a b\n\nc d e\n\nf");
}

TEST(Truncate, OversizedNewestNoteKeepsItsTail) {
  const std::vector<std::string> notes{words(5, 9), words(100, 0)};
  const auto out = truncate_context(notes, {40, BudgetUnit::whitespace_tokens});
  EXPECT_EQ(count_units(out, BudgetUnit::whitespace_tokens), 40u);
  std::string expected;
  for (int i = 60; i < 100; ++i) expected += (i > 60 ? " w0_" : "w0_") + std::to_string(i);
  EXPECT_EQ(out, expected);

  const std::string chars(100, 'x');
  const std::vector<std::string> one{chars + "END"};
  EXPECT_EQ(truncate_context(one, {40, BudgetUnit::characters}), std::string(37, 'x') + "END");
}

TEST(Truncate, CharacterBudgetCountsSeparators) {
  const std::vector<std::string> notes{"aaaa", "bbbb"};
  EXPECT_EQ(truncate_context(notes, {9, BudgetUnit::characters}), "bbbb");
  EXPECT_EQ(truncate_context(notes, {10, BudgetUnit::characters}), "aaaa\n\nbbbb");
}

TEST(Truncate, NeverExceedsBudgetProperty) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = static_cast<int>(gen() % 8);
    std::vector<std::string> notes;
    for (int i = 0; i < n; ++i) notes.push_back(words(1 + static_cast<int>(gen() % 60), i));
    const BudgetUnit unit = gen() % 2 ? BudgetUnit::characters : BudgetUnit::whitespace_tokens;
    const std::size_t budget = 1 + gen() % 200;
    const auto out = truncate_context(notes, {budget, unit});
    EXPECT_LE(count_units(out, unit), budget);
    // Output is a suffix of the full joined record.
    std::string full;
    for (int i = 0; i < n; ++i) full += (i ? "\n\n" : "") + notes[static_cast<std::size_t>(i)];
    EXPECT_TRUE(full.size() >= out.size() && full.compare(full.size() - out.size(), out.size(), out) == 0);
  }
}

TEST(Truncate, ZeroBudgetIsConfigError) {
  const std::vector<std::string> notes{"a"};
  EXPECT_THROW(truncate_context(notes, {0, BudgetUnit::characters}), ConfigError);
}

TEST(Featurize, EmptyContext) {
  const auto x = featurize("", phrases_for(EventKind::dialysis).question);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(x[i], 0.0);
  for (std::size_t i = 13; i < 22; ++i) EXPECT_EQ(x[i], 0.0);
  EXPECT_EQ(x[6], 0.0);
  EXPECT_EQ(x[7 + static_cast<std::size_t>(QuestionCategory::organ_support)], 1.0);
}

TEST(Featurize, PrecursorSetsIndicator) {
  const auto& vaso = phrases_for(EventKind::vasopressor_start);
  const std::string ctx = "overnight " + std::string(vaso.precursors[1]) + " noted";
  const auto x = featurize(ctx, vaso.question);
  EXPECT_EQ(x[static_cast<std::size_t>(EventKind::vasopressor_start)], 1.0);
  EXPECT_EQ(x[static_cast<std::size_t>(EventKind::dialysis)], 0.0);
  EXPECT_EQ(x[19], 1.0);
  EXPECT_GT(x[20], 0.0);
  EXPECT_EQ(x[21], 0.0);
  const auto other = featurize(ctx, phrases_for(EventKind::dialysis).question);
  EXPECT_EQ(other[19], 0.0);
  EXPECT_EQ(featurize(ctx, vaso.question), x);
}

TEST(Featurize, ConfirmationAlreadyInContext) {
  const auto& bank = phrases_for(EventKind::intubation);
  EXPECT_EQ(featurize(std::string(bank.confirmation), bank.question)[21], 1.0);
}

TEST(Featurize, LaterHitsWeighMore) {
  const auto& bank = phrases_for(EventKind::transfusion);
  const std::string p(bank.precursors[0]);
  const auto early = featurize(p + std::string(200, ' ') + "end", bank.question);
  const auto late = featurize("start" + std::string(200, ' ') + p, bank.question);
  EXPECT_GT(late[20], early[20]);
}

TEST(Policy, RejectsBadParameters) {
  EXPECT_THROW(LogisticPolicy({1.0}, 0.0, 0.0), ConfigError);
  EXPECT_THROW(LogisticPolicy({NAN}, 0.0, 1.0), ConfigError);
  const auto p = LogisticPolicy::zeros(3, 1.0);
  const std::vector<double> wrong{1.0, 2.0};
  EXPECT_THROW(p.mean_logit(wrong), InvariantError);
}

TEST(Policy, SampleLimits) {
  const std::vector<double> x{0.0};
  Rng rng(1);
  const auto tiny = sample_forecast(LogisticPolicy({0.0}, 0.0, 1e-12), x, rng);
  EXPECT_NEAR(tiny.probability, 0.5, 1e-9);
  ASSERT_TRUE(tiny.noise_record.has_value());
  const auto saturated = sample_forecast(LogisticPolicy({0.0}, 1e6, 1.0), x, rng);
  EXPECT_EQ(saturated.probability, 1.0);
  const auto floor = sample_forecast(LogisticPolicy({0.0}, -1e6, 1.0), x, rng);
  EXPECT_EQ(floor.probability, 0.0);
}

TEST(Policy, SampleDeterministicPerSeed) {
  const LogisticPolicy p({0.3, -0.2}, 0.1, 0.7);
  const std::vector<double> x{1.0, 2.0};
  Rng a(99), b(99);
  for (int i = 0; i < 10; ++i) {
    const auto sa = sample_forecast(p, x, a);
    const auto sb = sample_forecast(p, x, b);
    EXPECT_EQ(sa.probability, sb.probability);
    EXPECT_EQ(*sa.noise_record, *sb.noise_record);
    EXPECT_EQ(sa.probability, sigmoid(*sa.noise_record));
  }
}

TEST(Policy, SymmetricMeanOverManyDraws) {
  const auto p = LogisticPolicy::zeros(1, 1.0);
  const std::vector<double> x{0.0};
  Rng rng(2024);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_forecast(p, x, rng).probability;
  EXPECT_GE(sum / n, 0.49);
  EXPECT_LE(sum / n, 0.51);
}

TEST(Policy, ExpectedProbabilityMatchesSimpson) {
  for (double m : {-3.0, -1.0, 0.0, 0.4, 2.5})
    for (double s : {0.1, 0.5, 1.0, 2.0}) EXPECT_NEAR(expected_probability(m, s), simpson_expected(m, s), 1e-6);
  EXPECT_NEAR(expected_probability(0.0, 0.5), 0.5, 1e-12);
}

TEST(Constant, ReturnsRate) {
  ConstantForecaster c(0.248);
  EXPECT_EQ(c.forecast({"a", "ctx", "q"}).probability, 0.248);
  EXPECT_TRUE(c.forecast({"b", "", ""}).trace.empty());
  EXPECT_EQ(ConstantForecaster(0.5).forecast({"x", "y", "z"}).probability, 0.5);
  EXPECT_THROW(ConstantForecaster(1.0), ConfigError);
  EXPECT_THROW(ConstantForecaster(0.0), ConfigError);
}

TEST(PolicyForecasterTest, ExpectedModeAndTrace) {
  LogisticPolicy p(std::vector<double>(kFeatureDim, 0.0), 0.0, 0.5);
  PolicyForecaster f(p, "untrained");
  const auto s = f.forecast({"e", "context", std::string(phrases_for(EventKind::dialysis).question)});
  EXPECT_NEAR(s.probability, 0.5, 1e-12);
  EXPECT_FALSE(s.trace.empty());

  PolicyForecaster sampled(p, "s", PolicyForecaster::Mode::sampled, 3);
  const auto a = sampled.forecast({"e", "ctx", "q"});
  const auto b = sampled.forecast({"e", "ctx", "q"});
  EXPECT_EQ(a.probability, b.probability);
}

TEST(ParseReply, MarkerThenNumber) {
  const auto r = parse_probability_reply("PROBABILITY: 0.7 because the lactate is rising");
  EXPECT_DOUBLE_EQ(r.probability, 0.7);
  EXPECT_EQ(r.trace, "because the lactate is rising");
}

TEST(ParseReply, SkipsOutOfRangeNumbers) {
  const auto r = parse_probability_reply("Preamble 12. PROBABILITY: 45 percent, i.e. 0.45; likely");
  EXPECT_DOUBLE_EQ(r.probability, 0.45);
  EXPECT_EQ(r.trace, "; likely");
  EXPECT_DOUBLE_EQ(parse_probability_reply("PROBABILITY: 1").probability, 1.0);
  EXPECT_DOUBLE_EQ(parse_probability_reply("PROBABILITY:.25").probability, 0.25);
}

TEST(ParseReply, Failures) {
  EXPECT_THROW(parse_probability_reply("PROBABILITY: unsure"), ReplyParseError);
  EXPECT_THROW(parse_probability_reply("0.4 with no marker"), ReplyParseError);
  EXPECT_THROW(parse_probability_reply("PROBABILITY: 3 or 7"), ReplyParseError);
}

TEST(RenderPrompt, ReplacesPlaceholders) {
  EXPECT_EQ(render_prompt("[{instruction}|{context}|{question}|{other}]", "I", "C", "Q"), "[I|C|Q|{other}]");
}

TEST(EndpointForecasterTest, ParsesReplyAndSendsOnlyGivenContext) {
  fixtures::MockServer server([](const json&) { return json{{"text", "PROBABILITY: 0.7 because of rising lactate"}}; });
  auto f = endpoint_forecaster(server.url(), "mock-llm", std::string(kDefaultPromptTemplate), 5.0);
  const std::string ctx = "[2130-01-01T00:00:00Z] nursing: pre-split observation";
  const auto s = f->forecast({"e1", ctx, "Will X happen?"});
  EXPECT_DOUBLE_EQ(s.probability, 0.7);
  EXPECT_EQ(s.trace, "because of rising lactate");
  const auto reqs = server.requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0]["role"], "forecast");
  EXPECT_EQ(reqs[0]["model"], "mock-llm");
  const std::string prompt = reqs[0]["text"];
  EXPECT_NE(prompt.find(ctx), std::string::npos);
  EXPECT_NE(prompt.find("Will X happen?"), std::string::npos);
  EXPECT_EQ(f->name(), "mock-llm");
}

TEST(EndpointForecasterTest, UnparseableReplyIsTypedError) {
  fixtures::MockServer server([](const json&) { return json{{"text", "no idea"}}; });
  auto f = endpoint_forecaster(server.url(), "m", std::string(kDefaultPromptTemplate), 5.0);
  EXPECT_THROW(f->forecast({"e", "c", "q"}), ReplyParseError);
}

TEST(Predictions, JsonlRoundTrip) {
  const std::vector<Prediction> ps{{"a", "m", 0.25, "t", 1.5}, {"b", "m", 1.0, "", 0.0}};
  const auto path = std::filesystem::temp_directory_path() / "foresight-pred-roundtrip.jsonl";
  write_predictions(path, ps);
  const auto back = read_predictions(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].example_id, "a");
  EXPECT_EQ(back[0].probability, 0.25);
  EXPECT_EQ(back[1].trace, "");
}
