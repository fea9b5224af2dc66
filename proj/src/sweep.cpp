#include "misgen/sweep.hpp"

#include <fstream>

namespace misgen::evalkit {

void SweepSpec::validate() const {
  if (p_values.empty()) throw std::invalid_argument("SweepSpec: p_values empty");
  for (int p : p_values)
    if (p < 0 || p > 100) throw std::invalid_argument("SweepSpec: percentages must be in [0,100]");
  if (eval_episodes < 1) throw std::invalid_argument("SweepSpec: episodes must be >= 1");
  if (seeds_per_point < 1) throw std::invalid_argument("SweepSpec: seeds_per_point must be >= 1");
  if (train_timesteps < 1) throw std::invalid_argument("SweepSpec: train budget must be positive");
}

SweepResult run_ablation_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir,
                               const SweepProgress& progress) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };

  SweepResult result;
  for (size_t pi = 0; pi < spec.p_values.size(); ++pi) {
    const int p = spec.p_values[pi];
    SweepPoint point;
    point.p = p;
    try {
      std::vector<EpisodeRecord> pooled;
      std::string last_ckpt_id;
      ShiftConfig eval_shift = worlds::test_shift(Family::coinrun);
      for (int s = 0; s < spec.seeds_per_point; ++s) {
        train::TrainConfig cfg = spec.base;
        cfg.total_timesteps = spec.train_timesteps;
        cfg.seed = spec.base.seed + 1000 * pi + static_cast<uint64_t>(s);
        ShiftConfig train_sh = worlds::train_shift(Family::coinrun);
        train_sh.coin_random_pct = p;
        note("sweep p=" + std::to_string(p) + " seed=" + std::to_string(cfg.seed) + ": training");
        train::TrainState st = train::train(cfg, Family::coinrun, train_sh);
        note("sweep p=" + std::to_string(p) + ": evaluating " + std::to_string(spec.eval_episodes) +
             " episodes");
        EvalReport rep = evaluate(st, eval_shift, spec.eval_episodes, cfg.seed, spec.mode);
        last_ckpt_id = rep.checkpoint_id;
        pooled.insert(pooled.end(), rep.records.begin(), rep.records.end());
      }
      point.report = aggregate(Family::coinrun, eval_shift, last_ckpt_id, std::move(pooled));

      const std::filesystem::path pdir = out_dir / ("p" + std::to_string(p));
      std::filesystem::create_directories(pdir);
      write_report_jsonl(point.report, pdir / "records.jsonl");
      write_report_csv(point.report, pdir / "summary.csv", p);
      note("sweep p=" + std::to_string(p) + ": " + summary_line(point.report));
    } catch (const std::exception& e) {
      point.failed = true;
      point.error = e.what();
      result.any_failed = true;
      note("sweep p=" + std::to_string(p) + " FAILED: " + point.error);
    }
    result.points.push_back(std::move(point));
  }
  write_sweep_csv(result, out_dir / "sweep.csv");
  return result;
}

void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << "p,n,rate_truegoal,stderr_truegoal,rate_objfail,stderr_objfail,rate_capfail,stderr_capfail\n";
  for (const SweepPoint& pt : r.points) {
    if (pt.failed) {
      f << pt.p << ",0,,,,,,\n";
      continue;
    }
    f << pt.p << "," << pt.report.n();
    for (int i = 0; i < 3; ++i) f << "," << pt.report.rate[i] << "," << pt.report.stderr_[i];
    f << "\n";
  }
}

}  // namespace misgen::evalkit
