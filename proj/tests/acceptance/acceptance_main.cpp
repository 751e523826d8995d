// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Each check recomputes its expected values independently of the library
// code under test where an oracle exists.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "foresight/forge.hpp"
#include "foresight/judge.hpp"
#include "foresight/pipeline.hpp"
#include "foresight/scoring.hpp"
#include "foresight/synthetic.hpp"
#include "foresight/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/mock_server.hpp"

using namespace foresight;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void run(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("criterion %d %s: %s | %s | runtime %.2fs (limit %.0fs%s)\n", id, pass ? "PASS" : "FAIL", title,
              o.detail.c_str(), secs, limit_s, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::vector<LabeledForecast> labeled(const std::vector<double>& p, const std::vector<int>& y) {
  std::vector<LabeledForecast> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "e%05zu", i);
    out.push_back({id, p[i], y[i]});
  }
  return out;
}

Outcome constant_baseline() {
  Outcome o;
  std::vector<double> p(1000, 0.248);
  std::vector<int> y(1000, 0);
  std::fill(y.begin(), y.begin() + 274, 1);
  const auto xs = labeled(p, y);
  const auto report = evaluate(xs, xs);
  // Closed forms.
  const double reward = 0.274 * std::log(0.248) + 0.726 * std::log(0.752);
  const double brier_cf = 0.274 * 0.752 * 0.752 + 0.726 * 0.248 * 0.248;
  o.check(std::abs(report.mean_reward - -0.5890) <= 0.001, "reward " + fmt("%.5f", report.mean_reward) + " vs -0.5890 +-0.001");
  o.check(std::abs(report.brier - 0.1996) <= 0.001, "brier " + fmt("%.5f", report.brier) + " vs 0.1996 +-0.001");
  o.check(std::abs(report.mean_reward - reward) < 1e-9 && std::abs(report.brier - brier_cf) < 1e-12,
          "matches closed form");
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  std::mt19937_64 gen(2024);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 49);
    std::vector<double> p;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      p.push_back(static_cast<double>(gen() % 9) / 8.0);
      y.push_back(static_cast<int>(gen() % 2));
    }
    y[0] = 1;
    y[1] = 0;
    double good = 0, pairs = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1;
          good += p[i] > p[j] ? 1.0 : p[i] == p[j] ? 0.5 : 0.0;
        }
    worst = std::max(worst, std::abs(auroc(labeled(p, y)) - good / pairs));
  }
  o.check(worst <= 1e-12, "AUROC vs brute force max |diff| " + fmt("%.1e", worst) + " over 200 instances");
  const double e = ece(labeled({0.9, 0.9, 0.1, 0.1}, {1, 0, 0, 0}));
  o.check(e == 0.25, "ECE worked example " + fmt("%.17g", e));
  // 10 positives out of 100 holding the top scores: top k=10% lift is 1/k.
  std::vector<double> p(100);
  std::vector<int> y(100, 0);
  for (int i = 0; i < 100; ++i) p[i] = 1.0 - i / 100.0;
  for (int i = 0; i < 10; ++i) y[i] = 1;
  const double lift = top_k_lift(labeled(p, y), 0.10);
  o.check(std::abs(lift - 1.0 / 0.10) < 1e-12, "top-10% lift " + fmt("%.6f", lift) + " vs 1/k = 10");
  return o;
}

Outcome propriety() {
  Outcome o;
  int misses = 0;
  for (int qi = 1; qi <= 9; ++qi) {
    const double q = qi / 10.0;
    int arg_log = 0, arg_brier = 0;
    double best_log = -INFINITY, best_brier = INFINITY;
    for (int pi = 1; pi <= 99; ++pi) {
      const double p = pi / 100.0;
      const double l = q * log_score(p, 1) + (1 - q) * log_score(p, 0);
      const double b = q * brier(p, 1) + (1 - q) * brier(p, 0);
      if (l > best_log) best_log = l, arg_log = pi;
      if (b < best_brier) best_brier = b, arg_brier = pi;
    }
    misses += (arg_log != qi * 10) + (arg_brier != qi * 10);
  }
  o.check(misses == 0, std::to_string(18 - misses) + "/18 (rate, rule) optima at the grid point nearest q");
  return o;
}

Outcome temporal_wall() {
  Outcome o;
  const auto cohort = generate_synthetic_cohort(4242, 300);
  const auto eligible = filter_eligible(cohort.trajectories);
  auto annotator = rule_annotator(cohort.tracks);
  std::vector<PredictionExample> examples;
  std::size_t wall_ok = 0, wall_total = 0, labels_ok = 0;
  for (const auto& t : eligible) {
    const auto split = sample_split(t, 4242);
    const auto ex = generate_examples(t, split, *annotator);
    for (const auto& e : ex) {
      ++wall_total;
      bool clean = true;
      for (const auto& n : t.notes()) {
        const bool shown = e.context_text.find(render_note(n)) != std::string::npos;
        if (shown != (n.timestamp <= e.split_time)) clean = false;
      }
      wall_ok += clean;
      const auto kind = *event_kind_for_question(e.question);
      int oracle = 0;
      for (const auto& tr : cohort.tracks.at(e.admission_id))
        if (tr.kind == kind && tr.occurrence_time && *tr.occurrence_time > e.split_time &&
            *tr.occurrence_time <= t.discharge_time())
          oracle = 1;
      labels_ok += e.label == oracle;
    }
    examples.insert(examples.end(), ex.begin(), ex.end());
  }
  o.check(cohort.trajectories.size() >= 200, std::to_string(cohort.trajectories.size()) + " admissions");
  o.check(wall_total > 0 && wall_ok == wall_total,
          "pre-split-only context " + std::to_string(wall_ok) + "/" + std::to_string(wall_total));
  o.check(labels_ok == wall_total,
          "labels agree with latent tracks " + std::to_string(labels_ok) + "/" + std::to_string(wall_total));
  const auto part = partition_dataset(examples, 0.2, 4242);
  std::set<std::string> tp, ta;
  for (const auto& e : part.train) tp.insert(e.patient_id), ta.insert(e.admission_id);
  std::size_t overlap = 0;
  for (const auto& e : part.test) overlap += tp.count(e.patient_id) + ta.count(e.admission_id);
  o.check(overlap == 0 && !part.test.empty(), "train/test id overlap " + std::to_string(overlap));
  return o;
}

double quadrature_reward(double mu, double sigma) {
  const int n = 20000;
  const double lo = mu - 12 * sigma, hi = mu + 12 * sigma, h = (hi - lo) / n;
  double acc = 0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double dens = std::exp(-0.5 * std::pow((z - mu) / sigma, 2)) / (sigma * std::sqrt(2 * std::numbers::pi));
    acc += (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2)) * dens * log_score(1.0 / (1.0 + std::exp(-z)), 1);
  }
  return acc * h / 3;
}

Outcome grpo_mechanics() {
  Outcome o;
  Rng rng(5);
  double worst = 0;
  for (int g = 0; g < 10000; ++g) {
    std::vector<double> r(4);
    for (auto& v : r) v = -5 * rng.uniform();
    for (auto norm : {AdvantageNorm::mean_only, AdvantageNorm::mean_std}) {
      const auto a = group_advantages(r, norm);
      worst = std::max(worst, std::abs(std::accumulate(a.begin(), a.end(), 0.0)));
    }
  }
  o.check(worst < 1e-9, "max |sum advantages| " + fmt("%.1e", worst));
  const auto a = group_advantages(std::vector<double>{-0.2, -0.4, -0.6, -0.8}, AdvantageNorm::mean_std);
  const double expect[] = {1.342, 0.447, -0.447, -1.342};
  bool worked = true;
  for (int i = 0; i < 4; ++i) worked = worked && std::abs(a[i] - expect[i]) <= 1e-3;
  o.check(worked, "worked example " + fmt("%.4f", a[0]) + "/" + fmt("%.4f", a[1]) + "/" + fmt("%.4f", a[2]) + "/" +
                      fmt("%.4f", a[3]));
  const double w = 0.3, sigma = 0.8, h = 1e-3;
  const double fd = (quadrature_reward(w + h, sigma) - quadrature_reward(w - h, sigma)) / (2 * h);
  const LogisticPolicy p({w}, 0.0, sigma);
  GroupRollout g;
  g.features = {1.0};
  Rng draws(77);
  for (int i = 0; i < 1000000; ++i) {
    auto s = sample_forecast(p, g.features, draws);
    g.advantages.push_back(log_score(s.probability, 1));
    g.samples.push_back(std::move(s));
  }
  const double mc = policy_gradient(p, std::vector<GroupRollout>{g})[0];
  const double rel = std::abs(mc - fd) / std::abs(fd);
  o.check(rel < 0.05, "MC gradient " + fmt("%.5f", mc) + " vs finite difference " + fmt("%.5f", fd) + ", rel err " +
                          fmt("%.4f", rel));
  return o;
}

Outcome headline() {
  Outcome o;
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    fixtures::TempDir dir("acc6");
    RunOptions opts;
    opts.out_dir = dir.path();
    opts.seed_override = seed;
    const RunConfig cfg(default_config(), opts);
    cmd_synth(cfg);
    cmd_forge(cfg);
    cmd_train(cfg);
    cmd_predict(cfg);
    cmd_eval(cfg);
    const auto m = read_json_file(ArtifactPaths{dir.path()}.metrics_summary())["models"];
    const double tr = m["trained"]["mean_reward"], cr = m["constant"]["mean_reward"];
    const double te = m["trained"]["ece"], ue = m["untrained"]["ece"];
    o.check(tr > cr && te < ue, "seed " + std::to_string(seed) + ": reward " + fmt("%.4f", tr) + " > constant " +
                                    fmt("%.4f", cr) + ", ECE " + fmt("%.4f", te) + " < untrained " + fmt("%.4f", ue));
  }
  return o;
}

Outcome judge_harness() {
  Outcome o;
  std::vector<JudgePair> pairs;
  for (int i = 0; i < 1000; ++i)
    pairs.push_back({"pair" + std::to_string(i), "ctx", "q", "reasoning from one system", "reasoning from the other"});
  FirstPresentedJudge biased;
  const double rate = aggregate(run_pairwise(biased, pairs, 2718)).overall;
  o.check(rate >= 0.45 && rate <= 0.55, "position-biased win rate " + fmt("%.3f", rate) + " at n=1000");

  fixtures::MockServer server([](const json& req) { return json{{"verdict", req["text"].get<std::string>().size() % 2 ? "1" : "2"}}; });
  EndpointOptions eo;
  eo.base_url = server.url();
  eo.model_name = "judge";
  EndpointJudge endpoint(eo);
  std::vector<JudgePair> named;
  for (int i = 0; i < 40; ++i)
    named.push_back({"trained-vs-untrained-" + std::to_string(i), "ctx", "q", "alpha reasoning", "beta reasoning text"});
  run_pairwise(endpoint, named, 3);
  std::size_t clean = 0;
  const auto reqs = server.requests();
  for (const auto& r : reqs) {
    const std::string t = r["text"];
    bool ok = t.find("Response 1") != std::string::npos && t.find("Response 2") != std::string::npos;
    for (const char* leak : {"trained", "untrained", "constant", "System A", "System B", "Response A", "Response B"})
      ok = ok && t.find(leak) == std::string::npos;
    for (const auto& [k, v] : r.items()) ok = ok && (k == "role" || k == "model" || k == "text" || k == "dimensions");
    clean += ok;
  }
  o.check(!reqs.empty() && clean == reqs.size(),
          "blinded requests " + std::to_string(clean) + "/" + std::to_string(reqs.size()));

  std::vector<JudgeVerdict> v;
  for (int i = 0; i < 50; ++i) {
    v.push_back({"r" + std::to_string(i), JudgeDimension::clinical_reasoning, i < 39 ? Winner::A : Winner::B, PresentedOrder::AB});
    v.push_back({"m" + std::to_string(i), JudgeDimension::medical_knowledge, i < 46 ? Winner::A : Winner::B, PresentedOrder::BA});
  }
  const auto t = aggregate(v);
  const double r = t.dimension_rate[0] * 100.0, m = t.dimension_rate[1] * 100.0;
  o.check(fmt("%.1f", r) == "78.0" && fmt("%.1f", m) == "92.0" && r == 78.0 && m == 92.0,
          "aggregation " + fmt("%.1f%%", r) + " / " + fmt("%.1f%%", m));
  return o;
}

Outcome determinism() {
  Outcome o;
  std::string first;
  for (int run = 0; run < 2; ++run) {
    fixtures::TempDir dir("acc8");
    RunOptions opts;
    opts.out_dir = dir.path();
    const RunConfig cfg(default_config(), opts);
    cmd_synth(cfg);
    cmd_forge(cfg);
    cmd_train(cfg);
    cmd_predict(cfg);
    cmd_eval(cfg);
    const auto bytes = fixtures::slurp(ArtifactPaths{dir.path()}.metrics_summary());
    if (run == 0) first = bytes;
    else o.check(!bytes.empty() && bytes == first, "metrics JSON byte-identical across two runs (" +
                                                       std::to_string(bytes.size()) + " bytes)");
  }
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  run(1, "constant-baseline reproduction", 1, constant_baseline);
  run(2, "metric oracle equivalence", 5, metric_oracles);
  run(3, "propriety grid check", 5, propriety);
  run(4, "temporal wall and leakage", 30, temporal_wall);
  run(5, "GRPO mechanics", 60, grpo_mechanics);
  run(6, "trained policy beats baselines on 3 seeds", 300, headline);
  run(7, "judge harness", 10, judge_harness);
  run(8, "pipeline determinism", 600, determinism);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
