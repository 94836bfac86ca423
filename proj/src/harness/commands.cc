#include "losspred/harness/commands.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "losspred/dataset.h"
#include "losspred/error.h"
#include "losspred/harness/config.h"
#include "losspred/harness/stats.h"
#include "losspred/harness/svg.h"
#include "losspred/loss_prediction.h"
#include "losspred/losses.h"
#include "losspred/mc_boost.h"
#include "losspred/multicalibration.h"
#include "losspred/predictors.h"
#include "losspred/util.h"

namespace losspred::harness {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  json config;
  fs::path out;
  fs::path base_dir;
  std::uint64_t seed = 0;
  json violations = json::array();
  json warnings = json::array();

  void violation(const std::string& what) { violations.push_back(what); }
  void warn(const std::string& what) { warnings.push_back(what); }
};

json default_calibration() { return {{"metric", "smoothed"}, {"bandwidth", 0.1}, {"bins", 10}}; }

json default_config(const std::string& command) {
  const json dataset = {{"kind", "synthetic"}, {"n", 2000}, {"d", 4}, {"theta", 0.0},
                        {"weight_scale", 1.0}};
  if (command == "audit" || command == "train-lp") {
    return {{"seed", 0},
            {"dataset", dataset},
            {"split", {{"train", 0.5}}},
            {"predictor", {{"family", "logistic"}}},
            {"loss", "squared"},
            {"level", "input-aware"},
            {"loss_predictor", {{"algo", "stump-ensemble"}}},
            {"calibration", default_calibration()},
            {"blind_spot_tolerance", 1e-9}};
  }
  if (command == "experiment") {
    return {{"seed", 0},
            {"synthetic", {{"n", 6000}, {"d", 4}, {"weight_scale", 1.5}}},
            {"thetas", {0.0, 0.25, 0.5, 0.75, 1.0}},
            {"families",
             {{{"family", "logistic"}}, {{"family", "naive-bayes"}}, {{"family", "tree"}}}},
            {"loss_predictors",
             {{{"algo", "tree"}, {"max_depth", 4}, {"min_leaf", 100}},
              {{"algo", "stump-ensemble"}, {"rounds", 100}, {"min_leaf", 20}}}},
            {"blend_target", 0.9},
            {"split", {{"base", 0.4}, {"lp", 0.3}, {"test", 0.3}}},
            {"loss", "squared"},
            {"level", "input-aware"},
            {"calibration", default_calibration()},
            {"concordance_threshold", 0.8},
            {"calibrated_families", {"logistic"}},
            {"noise_multiplier", 3.0}};
  }
  if (command == "boost") {
    return {{"seed", 0},
            {"dataset", dataset},
            {"alpha", 0.1},
            {"epsilon", 0.2},
            {"level", "input-aware"},
            {"max_thresholds", 16},
            {"panel_size", 8},
            {"panel_pieces", 4},
            {"panel_seed", nullptr},
            {"shards", 1},
            {"max_updates", nullptr}};
  }
  if (command == "basis-check") {
    return {{"seed", 0}, {"epsilon", 0.1}, {"n_losses", 100}, {"pieces", 6}};
  }
  if (command == "report") return {{"input", nullptr}};
  throw ConfigError("unknown command: " + command);
}

void normalize_specs(json& c) {
  if (c.contains("predictor")) c["predictor"] = PredictorSpec::from_json(c["predictor"]).to_json();
  if (c.contains("loss_predictor")) {
    c["loss_predictor"] = LossPredictorSpec::from_json(c["loss_predictor"]).to_json();
  }
  if (c.contains("families")) {
    for (auto& f : c["families"]) f = PredictorSpec::from_json(f).to_json();
  }
  if (c.contains("loss_predictors")) {
    for (auto& l : c["loss_predictors"]) l = LossPredictorSpec::from_json(l).to_json();
  }
  if (c.contains("loss")) c["loss"] = ProperLoss::from_json(c["loss"]).to_json();
  if (c.contains("calibration")) {
    c["calibration"] = CalibrationParams::from_json(c["calibration"]).to_json();
  }
  if (c.contains("level")) view_level_from_string(c["level"].get<std::string>());
}

// Per-row improvement (l - H)^2 - (l - LP)^2, whose mean is the advantage.
std::vector<double> advantage_terms(const LossPredictor& lp, const ProperLoss& loss,
                                    const ViewTable& views, std::span<const int> labels) {
  std::vector<double> out(views.n);
  for (std::size_t i = 0; i < views.n; ++i) {
    const auto phi = views.row(i);
    const double l = eval_loss(loss, labels[i], phi[0]);
    const double a = l - loss.entropy(phi[0]);
    const double b = l - lp(phi);
    out[i] = a * a - b * b;
  }
  return out;
}

ViewTable subset_rows(const ViewTable& views, const Mask& mask) {
  ViewTable t;
  t.level = views.level;
  t.width = views.width;
  for (std::size_t i = 0; i < views.n; ++i) {
    if (!mask[i]) continue;
    const auto phi = views.row(i);
    t.values.insert(t.values.end(), phi.begin(), phi.end());
    ++t.n;
  }
  return t;
}

std::vector<int> subset_labels(std::span<const int> labels, const Mask& mask) {
  std::vector<int> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (mask[i]) out.push_back(labels[i]);
  }
  return out;
}

json subgroup_json(const SubgroupCe& s) {
  json per = json::array();
  for (const auto& [name, v] : s.per_group) per.push_back({{"subgroup", name}, {"value", v}});
  return {{"value", s.value}, {"subgroup", s.subgroup}, {"per_group", per},
          {"skipped", s.skipped}};
}

struct LpRun {
  Dataset train, test;
  Predictor predictor = Predictor::constant(0.5);
  ProperLoss loss = ProperLoss::squared();
  ViewLevel level = ViewLevel::kInputAware;
  LossPredictor lp = LossPredictor::self_entropy(ProperLoss::squared());
};

LpRun fit_lp_run(Context& ctx) {
  const json& c = ctx.config;
  Dataset data = make_dataset(c.at("dataset"), ctx.seed, ctx.base_dir);
  const double train = c.at("split").at("train").get<double>();
  auto [tr, te] = split(data, train, 1.0 - train, ctx.seed + 1);
  LpRun run{std::move(tr), std::move(te)};
  run.predictor = fit(PredictorSpec::from_json(c.at("predictor")), run.train);
  run.loss = ProperLoss::from_json(c.at("loss"));
  run.level = view_level_from_string(c.at("level").get<std::string>());
  run.lp = train_loss_predictor(LossPredictorSpec::from_json(c.at("loss_predictor")), run.loss,
                                run.predictor, run.level, run.train);
  return run;
}

json evaluate_lp(Context& ctx, const LpRun& run, std::vector<Table>& tables,
                 bool with_plot) {
  const Dataset& test = run.test;
  const ViewTable views = build_views(run.level, run.predictor, test);
  const AdvantageReport adv = advantage(run.lp, run.loss, views, test.labels);
  const auto terms = advantage_terms(run.lp, run.loss, views, test.labels);
  const double se = standard_error(terms);
  const TestFunction witness = witness_from_lp(run.lp, run.loss);
  const double corr = signed_correlation(witness, views, test.labels);
  const bool half_holds = corr >= adv.advantage / 2.0 - 1e-9;
  if (!half_holds) ctx.violation("witness correlation below half the advantage");

  const auto preds = views.predictions();
  const CalibrationParams calib = CalibrationParams::from_json(ctx.config.at("calibration"));
  const double tol = ctx.config.at("blind_spot_tolerance").get<double>();
  std::size_t blind = 0;
  for (double p : preds) blind += std::abs(run.loss.superderivative(p)) <= tol;
  const double blind_fraction = preds.empty() ? 0.0 : static_cast<double>(blind) / preds.size();
  if (blind_fraction >= 0.5) {
    ctx.warn("most test predictions sit at a blind spot of the loss (H' = 0); the realized "
             "loss does not depend on the label there and no loss predictor can beat SEP");
  }

  json report;
  report["n_train"] = run.train.n;
  report["n_test"] = test.n;
  report["predictor_family"] = run.predictor.family();
  report["loss"] = run.loss.name();
  report["level"] = to_string(run.level);
  report["loss_predictor"] = run.lp.algo();
  report["advantage"] = adv.to_json();
  report["advantage_se"] = se;
  report["noise_bound"] = 3.0 * se;
  report["witness"] = {{"id", witness.id()},
                       {"correlation", corr},
                       {"half_advantage", adv.advantage / 2.0},
                       {"bound_holds", half_holds}};
  report["blind_spot_fraction"] = blind_fraction;
  json cal = {{"binned", binned_ce(preds, test.labels, calib.bins)},
              {"smoothed", smoothed_ce(preds, test.labels, calib.bandwidth)},
              {"params", calib.to_json()}};

  Table metrics("metrics", {"metric", "value"}, {"metric name", "value on the test split"});
  metrics.add_row({"advantage", Table::cell(adv.advantage)});
  metrics.add_row({"advantage_se", Table::cell(se)});
  metrics.add_row({"sep_sq_error", Table::cell(adv.sep_sq_error)});
  metrics.add_row({"lp_sq_error", Table::cell(adv.lp_sq_error)});
  metrics.add_row({"witness_correlation", Table::cell(corr)});
  metrics.add_row({"binned_ce", Table::cell(cal["binned"].get<double>())});
  metrics.add_row({"smoothed_ce", Table::cell(cal["smoothed"].get<double>())});
  metrics.add_row({"blind_spot_fraction", Table::cell(blind_fraction)});

  Table groups("subgroups", {"subgroup", "n", "calibration_error", "advantage"},
               {"subgroup name", "test rows in the subgroup",
                "calibration error restricted to the subgroup",
                "advantage restricted to the subgroup"});
  Series points{"subgroups", {}, {}, false};
  if (!test.subgroups.empty()) {
    try {
      const SubgroupCe sub = max_subgroup_ce(preds, test, calib);
      cal["max_subgroup"] = subgroup_json(sub);
      for (const auto& name : sub.skipped) ctx.warn("subgroup '" + name + "' is empty in the test split");
      for (const auto& [name, value] : sub.per_group) {
        const Mask& mask = test.subgroups.at(name);
        const ViewTable sv = subset_rows(views, mask);
        const auto sl = subset_labels(test.labels, mask);
        const double a = advantage(run.lp, run.loss, sv, sl).advantage;
        groups.add_row({name, Table::cell(sv.n), Table::cell(value), Table::cell(a)});
        points.x.push_back(value);
        points.y.push_back(a);
      }
    } catch (const EmptySubgroup& e) {
      ctx.warn(e.what());
    }
  }
  report["calibration"] = cal;
  tables.push_back(std::move(metrics));
  tables.push_back(std::move(groups));
  if (with_plot) {
    write_text(ctx.out / "plots" / "subgroups.svg",
               scatter_svg("Subgroup advantage vs calibration error", "calibration error",
                           "advantage", {points}));
  }
  return report;
}

json cmd_audit(Context& ctx) {
  const LpRun run = fit_lp_run(ctx);
  std::vector<Table> tables;
  json report = evaluate_lp(ctx, run, tables, true);
  write_tables(ctx.out, tables);
  return report;
}

json cmd_train_lp(Context& ctx) {
  const LpRun run = fit_lp_run(ctx);
  std::vector<Table> tables;
  json report = evaluate_lp(ctx, run, tables, true);
  const ViewTable train_views = build_views(run.level, run.predictor, run.train);
  report["train_advantage"] = advantage(run.lp, run.loss, train_views, run.train.labels).to_json();
  write_json(ctx.out / "predictor.json", run.predictor.to_json());
  write_json(ctx.out / "loss_predictor.json", run.lp.to_json());
  report["artifacts"] = {"predictor.json", "loss_predictor.json"};
  write_tables(ctx.out, tables);
  return report;
}

json cmd_experiment(Context& ctx) {
  const json& c = ctx.config;
  SynthSpec spec = SynthSpec::from_json(c.at("synthetic"));
  const Dataset data = synth_generate(spec, ctx.seed);
  const double f_base = c.at("split").at("base").get<double>();
  const double f_lp = c.at("split").at("lp").get<double>();
  const double f_test = c.at("split").at("test").get<double>();
  if (std::abs(f_base + f_lp + f_test - 1.0) > 1e-9) {
    throw ConfigError("experiment split fractions must sum to 1");
  }
  auto [base, rest] = split(data, f_base, 1.0 - f_base, ctx.seed + 1);
  auto [lp_data, test] = split(rest, f_lp / (f_lp + f_test), f_test / (f_lp + f_test),
                               ctx.seed + 2);
  const ProperLoss loss = ProperLoss::from_json(c.at("loss"));
  const ViewLevel level = view_level_from_string(c.at("level").get<std::string>());
  const CalibrationParams calib = CalibrationParams::from_json(c.at("calibration"));
  const double target = c.at("blend_target").get<double>();
  const double noise_mult = c.at("noise_multiplier").get<double>();
  std::vector<LossPredictorSpec> lp_specs;
  for (const auto& l : c.at("loss_predictors")) lp_specs.push_back(LossPredictorSpec::from_json(l));
  if (c.at("families").size() < 3 || lp_specs.size() < 2) {
    ctx.warn("fewer than 3 base families or 2 loss-predictor algorithms configured");
  }
  const auto calibrated = c.at("calibrated_families").get<std::vector<std::string>>();

  Table cell_table("cells",
             {"theta", "family", "lp_algo", "max_subgroup_ce", "max_subgroup", "global_ce",
              "advantage", "advantage_se", "sep_sq_error", "lp_sq_error", "n_test"},
             {"miscalibration knob: blend weight toward the constant target",
              "base predictor family", "loss predictor algorithm",
              "max over subgroups of the calibration error on the test split",
              "subgroup attaining the maximum", "calibration error on the whole test split",
              "held-out advantage of the loss predictor over SEP",
              "standard error of the advantage", "squared error of SEP",
              "squared error of the loss predictor", "test rows"});
  Table group_table("subgroup_cells",
             {"theta", "family", "lp_algo", "subgroup", "n", "calibration_error", "advantage"},
             {"miscalibration knob", "base predictor family",
              "loss predictor algorithm (fixed to the first configured)", "subgroup name",
              "test rows in the subgroup", "subgroup calibration error",
              "advantage restricted to the subgroup"});

  json cells = json::array();
  std::vector<double> xs, ys, sub_x, sub_y;
  std::map<std::string, Series> model_series, group_series;
  json theta0 = json::array();
  bool theta0_ok = true;
  for (const auto& family_json : c.at("families")) {
    const PredictorSpec fspec = PredictorSpec::from_json(family_json);
    auto fitted = std::make_shared<const Predictor>(fit(fspec, base));
    for (const auto& theta_json : c.at("thetas")) {
      const double theta = theta_json.get<double>();
      const Predictor p(BlendModel{fitted, theta, target}, data.d,
                        {{"family", "blend"}, {"base", fspec.family}, {"theta", theta}});
      const ViewTable test_views = build_views(level, p, test);
      const auto preds = test_views.predictions();
      const SubgroupCe sub = max_subgroup_ce(preds, test, calib);
      const double global = calibration_error(preds, test.labels, calib);
      for (std::size_t k = 0; k < lp_specs.size(); ++k) {
        const LossPredictor lp = train_loss_predictor(lp_specs[k], loss, p, level, lp_data);
        const AdvantageReport adv = advantage(lp, loss, test_views, test.labels);
        const double se = standard_error(advantage_terms(lp, loss, test_views, test.labels));
        const std::string algo = lp_specs[k].algo;
        cell_table.add_row({Table::cell(theta), fspec.family, algo, Table::cell(sub.value), sub.subgroup,
                      Table::cell(global), Table::cell(adv.advantage), Table::cell(se),
                      Table::cell(adv.sep_sq_error), Table::cell(adv.lp_sq_error),
                      Table::cell(adv.n)});
        json per = json::array();
        for (const auto& [name, value] : sub.per_group) {
          const Mask& mask = test.subgroups.at(name);
          const ViewTable sv = subset_rows(test_views, mask);
          const double a = advantage(lp, loss, sv, subset_labels(test.labels, mask)).advantage;
          per.push_back({{"subgroup", name}, {"n", sv.n}, {"calibration_error", value},
                         {"advantage", a}});
          if (k == 0) {
            group_table.add_row({Table::cell(theta), fspec.family, algo, name, Table::cell(sv.n),
                          Table::cell(value), Table::cell(a)});
            sub_x.push_back(value);
            sub_y.push_back(a);
            auto& s = group_series[fspec.family];
            s.name = fspec.family;
            s.x.push_back(value);
            s.y.push_back(a);
          }
        }
        cells.push_back({{"theta", theta},
                         {"family", fspec.family},
                         {"lp_algo", algo},
                         {"max_subgroup_ce", sub.value},
                         {"max_subgroup", sub.subgroup},
                         {"global_ce", global},
                         {"advantage", adv.to_json()},
                         {"advantage_se", se},
                         {"per_subgroup", per}});
        xs.push_back(sub.value);
        ys.push_back(adv.advantage);
        auto& s = model_series[fspec.family + " / " + algo];
        s.name = fspec.family + " / " + algo;
        s.x.push_back(sub.value);
        s.y.push_back(adv.advantage);
        if (theta == 0.0 &&
            std::find(calibrated.begin(), calibrated.end(), fspec.family) != calibrated.end()) {
          const bool ok = std::abs(adv.advantage) <= noise_mult * se;
          theta0_ok = theta0_ok && ok;
          theta0.push_back({{"family", fspec.family}, {"lp_algo", algo},
                            {"advantage", adv.advantage}, {"noise_bound", noise_mult * se},
                            {"within_noise", ok}});
        }
      }
    }
  }
  const double rho = spearman(xs, ys);
  const Concordance conc = sign_concordance(xs, ys);
  const double threshold = c.at("concordance_threshold").get<double>();
  if (!(rho > 0.0)) ctx.violation("Spearman correlation is not positive");
  if (conc.fraction < threshold) ctx.violation("sign concordance below the threshold");
  if (!theta0_ok) ctx.violation("a theta = 0 cell shows advantage beyond the noise bound");

  std::vector<Series> s1, s2;
  for (auto& [k, s] : model_series) s1.push_back(std::move(s));
  for (auto& [k, s] : group_series) s2.push_back(std::move(s));
  write_text(ctx.out / "plots" / "advantage_vs_max_subgroup_ce.svg",
             scatter_svg("Advantage vs max subgroup calibration error",
                         "max subgroup calibration error", "held-out advantage", s1));
  write_text(ctx.out / "plots" / "subgroup_advantage.svg",
             scatter_svg("Per-subgroup advantage (" + lp_specs[0].algo + " loss predictor)",
                         "subgroup calibration error", "subgroup advantage", s2));
  write_tables(ctx.out, {cell_table, group_table});

  json report;
  report["n"] = {{"base", base.n}, {"lp", lp_data.n}, {"test", test.n}};
  report["cells"] = cells;
  report["stats"] = {{"spearman", rho},
                     {"concordance", conc.to_json()},
                     {"concordance_threshold", threshold},
                     {"subgroup_spearman", spearman(sub_x, sub_y)},
                     {"theta0", theta0}};
  return report;
}

json cmd_boost(Context& ctx) {
  json& c = ctx.config;
  const Dataset data = make_dataset(c.at("dataset"), ctx.seed, ctx.base_dir);
  LipschitzOptions options = LipschitzOptions::from_json(c);
  const LipschitzResult result = [&] {
    try {
      return mc_all_lipschitz(data, options);
    } catch (const IterationCap& e) {
      write_text(ctx.out / "trace.jsonl", e.trace().to_json_lines());
      throw;
    }
  }();
  const BoostTrace& trace = result.boost.trace;
  const Certificate& cert = result.certificate;
  write_json(ctx.out / "predictor.json", result.boost.predictor.to_json());
  write_text(ctx.out / "trace.jsonl", trace.to_json_lines());
  if (trace.rounds.size() > trace.cap) ctx.violation("round count exceeds ceil(4 / alpha^2)");
  if (!cert.bound_holds) ctx.violation("panel advantage exceeds 16 alpha + 4 epsilon");
  if (cert.panel_after > cert.panel_before) {
    ctx.violation("panel advantage increased after boosting");
  }
  for (const auto& w : trace.warnings) ctx.warn(w);

  Table rounds("trace",
               {"round", "b_index", "b", "a", "correlation", "sq_error_labels", "sq_error_p_star"},
               {"update number", "index of the B function", "B function id",
                "weak learner hypothesis id", "correlation E[a z] found by the weak learner",
                "mean (p - y)^2 after the update",
                "mean (p - p*)^2 after the update (empty without p*)"});
  Series pot{"labels", {0.0}, {trace.initial_sq_error_labels}, true};
  for (const auto& r : trace.rounds) {
    rounds.add_row({Table::cell(r.round), Table::cell(r.b_index), r.b_id, r.a_id,
                    Table::cell(r.correlation), Table::cell(r.sq_error_labels),
                    r.sq_error_p_star ? Table::cell(*r.sq_error_p_star) : ""});
    pot.x.push_back(static_cast<double>(r.round));
    pot.y.push_back(r.sq_error_labels);
  }
  Table panel("panel", {"loss", "kind"}, {"panel loss name", "loss family"});
  for (const auto& l : result.panel) panel.add_row({l.name(), "sampled 1-Lipschitz"});
  write_tables(ctx.out, {rounds, panel});
  write_text(ctx.out / "plots" / "potential.svg",
             scatter_svg("Squared error during boosting", "round", "mean squared error", {pot}));

  json report;
  report["n"] = data.n;
  report["options"] = options.to_json();
  report["trace"] = trace.summary_json();
  report["certificate"] = cert.to_json();
  report["basis"] = result.basis.to_json();
  report["artifacts"] = {"predictor.json", "trace.jsonl"};
  return report;
}

json cmd_basis_check(Context& ctx) {
  const json& c = ctx.config;
  const double eps = c.at("epsilon").get<double>();
  const std::size_t n_losses = c.at("n_losses").get<std::size_t>();
  const int pieces = c.at("pieces").get<int>();
  const Basis basis = lipschitz_basis(eps);
  Table fits("basis_fits", {"loss", "sup_error", "norm"},
             {"sampled loss name", "sup-norm fit error on the 1/1024 grid",
              "l1 norm of the basis coefficients"});
  double max_err = 0.0, max_norm = 0.0;
  if (n_losses == 0) ctx.warn("no losses sampled; the check passes trivially");
  for (std::size_t k = 0; k < n_losses; ++k) {
    const ProperLoss loss = sample_lipschitz_loss(ctx.seed + k, pieces);
    BasisFit fit;
    try {
      fit = basis_fit(basis, [&](double v) { return loss.superderivative(v); }, true);
    } catch (const BasisViolation& e) {
      ctx.violation(loss.name() + ": " + e.what());
      fit = basis_fit(basis, [&](double v) { return loss.superderivative(v); }, false);
    }
    max_err = std::max(max_err, fit.sup_error);
    max_norm = std::max(max_norm, fit.norm);
    fits.add_row({loss.name(), Table::cell(fit.sup_error), Table::cell(fit.norm)});
  }
  write_tables(ctx.out, {fits});
  return {{"d", basis.d()},
          {"epsilon", eps},
          {"lambda", basis.lambda},
          {"n_losses", n_losses},
          {"max_sup_error", max_err},
          {"max_norm", max_norm},
          {"basis", basis.to_json()}};
}

json cmd_report(Context& ctx) {
  const json& in = ctx.config.at("input");
  if (!in.is_string()) throw ConfigError("report needs \"input\": a run directory");
  fs::path dir = in.get<std::string>();
  if (dir.is_relative() && !ctx.base_dir.empty()) dir = ctx.base_dir / dir;
  const json source = read_json_file(dir / "report.json");
  std::ostringstream text;
  text << "command: " << source.value("command", std::string("?")) << "\n";
  text << "exit_code: " << source.value("exit_code", -1) << "\n";
  const json& body = source.value("result", json::object());
  for (const auto& key : {"advantage", "witness", "stats", "certificate", "trace"}) {
    if (body.contains(key)) text << key << ": " << body.at(key).dump() << "\n";
  }
  for (const auto& key : {"max_sup_error", "max_norm", "d"}) {
    if (body.contains(key)) text << key << ": " << body.at(key).dump() << "\n";
  }
  for (const auto& v : source.value("violations", json::array())) {
    text << "violation: " << v.get<std::string>() << "\n";
  }
  for (const auto& w : source.value("warnings", json::array())) {
    text << "warning: " << w.get<std::string>() << "\n";
  }
  write_text(ctx.out / "summary.txt", text.str());
  std::cout << text.str();
  Table t("summary", {"line"}, {"one line of the rendered summary"});
  std::istringstream lines(text.str());
  for (std::string line; std::getline(lines, line);) t.add_row({line});
  write_tables(ctx.out, {t});
  return {{"source", dir.string()}, {"source_command", source.value("command", std::string())}};
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"audit",       "train-lp", "experiment",
                                              "boost",       "basis-check", "report"};
  return names;
}

json resolve_config(const std::string& command, json config,
                    std::optional<std::uint64_t> seed_override) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  json resolved = default_config(command);
  resolved.merge_patch(config);
  if (seed_override) resolved["seed"] = *seed_override;
  if (resolved.contains("panel_seed") && resolved["panel_seed"].is_null()) {
    resolved["panel_seed"] = resolved["seed"].get<std::uint64_t>() + 2;
  }
  normalize_specs(resolved);
  return resolved;
}

CommandOutcome run_command(const std::string& command, const json& config, const fs::path& out,
                           std::optional<std::uint64_t> seed_override, const fs::path& base_dir) {
  CommandOutcome outcome;
  Context ctx;
  ctx.out = out;
  ctx.base_dir = base_dir;
  json result;
  std::string error;
  try {
    ctx.config = resolve_config(command, config, seed_override);
    ctx.seed = ctx.config.value("seed", std::uint64_t{0});
    write_json(out / "config.resolved.json", ctx.config);
    if (command == "audit") {
      result = cmd_audit(ctx);
    } else if (command == "train-lp") {
      result = cmd_train_lp(ctx);
    } else if (command == "experiment") {
      result = cmd_experiment(ctx);
    } else if (command == "boost") {
      result = cmd_boost(ctx);
    } else if (command == "basis-check") {
      result = cmd_basis_check(ctx);
    } else {
      result = cmd_report(ctx);
    }
    outcome.exit_code = ctx.violations.empty() ? kExitOk : kExitViolation;
  } catch (const SandwichViolation& e) {
    error = e.what();
    outcome.exit_code = kExitViolation;
  } catch (const BasisViolation& e) {
    error = e.what();
    outcome.exit_code = kExitViolation;
  } catch (const IterationCap& e) {
    error = e.what();
    outcome.exit_code = kExitViolation;
  } catch (const Error& e) {
    error = e.what();
    outcome.exit_code = kExitConfigError;
  } catch (const json::exception& e) {
    error = std::string("config: ") + e.what();
    outcome.exit_code = kExitConfigError;
  }
  json report = {{"command", command},
                 {"exit_code", outcome.exit_code},
                 {"seed", ctx.seed},
                 {"violations", ctx.violations},
                 {"warnings", ctx.warnings},
                 {"result", result}};
  if (!error.empty()) report["error"] = error;
  write_json(out / "report.json", report);
  outcome.report = std::move(report);
  return outcome;
}

}  // namespace losspred::harness
