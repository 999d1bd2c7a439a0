#include "namvp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "namvp/io.hpp"
#include "namvp/ot.hpp"
#include "namvp/synth.hpp"
#include "namvp/trainer.hpp"

namespace namvp {

namespace {

namespace fs = std::filesystem;

void add_alignment_flags(CLI::App* cmd, AlignmentConfig& a) {
  cmd->add_option("--epsilon", a.epsilon, "Entropic weight of the patch/prompt UOT")->capture_default_str();
  cmd->add_option("--theta", a.theta, "Transported mass of the UOT")->capture_default_str();
  cmd->add_option("--max-iter", a.max_iter, "UOT iteration cap")->capture_default_str();
  cmd->add_option("--stop-delta", a.stop_delta, "UOT stopping threshold on the nu-scaling change")
      ->capture_default_str();
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    io::write_text(path, text);
  }
}

std::string plan_text(const ot::TransportPlan& t, const std::string& header) {
  std::ostringstream ss;
  ss << header;
  ss << "# objective=" << io::format_real(t.objective) << '\n';
  ss << "# iterations=" << t.iterations << '\n';
  ss << "# converged=" << (t.converged ? "true" : "false") << '\n';
  io::write_csv_matrix(ss, t.plan);
  return ss.str();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise-aware multi-view prompt alignment and OT label refinement"};
  app.require_subcommand(1);

  // gen
  synth::SynthConfig gen_cfg;
  std::string gen_out;
  std::string noise_kind = "symmetric";
  auto* gen = app.add_subcommand("gen", "Generate a synthetic embedding dataset");
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  gen->add_option("--classes", gen_cfg.num_classes)->capture_default_str();
  gen->add_option("--shots", gen_cfg.shots, "Samples per class")->capture_default_str();
  gen->add_option("--dim", gen_cfg.dim)->capture_default_str();
  gen->add_option("--patches", gen_cfg.patches)->capture_default_str();
  gen->add_option("--separation", gen_cfg.separation)->capture_default_str();
  gen->add_option("--background", gen_cfg.background_fraction, "Fraction of pure-noise patches")
      ->capture_default_str();
  gen->add_option("--noise-rate", gen_cfg.noise_rate)->capture_default_str();
  gen->add_option("--noise-kind", noise_kind, "symmetric | asymmetric")->capture_default_str();
  gen->add_option("--seed", gen_cfg.seed)->capture_default_str();
  gen->add_option("--split", gen_cfg.split, "Sample stream; prototypes depend on --seed only")
      ->capture_default_str();

  // train
  TrainConfig train_cfg;
  std::string train_data;
  std::string train_out;
  std::string train_config_file;
  auto* train_cmd = app.add_subcommand("train", "Train a prompt bank with selective label refinement");
  train_cmd->add_option("--data", train_data, "Training dataset directory")->required();
  train_cmd->add_option("--out", train_out, "Output directory (bank.json, history.jsonl, report.json)")
      ->required();
  train_cmd->add_option("--config", train_config_file, "JSON file of TrainConfig fields");
  // Explicit flags override the config file; they are applied after it.
  CLI::App* tc = train_cmd;
  auto* o_epochs = tc->add_option("--epochs", train_cfg.epochs);
  auto* o_sup = tc->add_option("--sup-epochs", train_cfg.sup_epochs);
  auto* o_lr = tc->add_option("--lr", train_cfg.sgd.learning_rate);
  auto* o_mom = tc->add_option("--momentum", train_cfg.sgd.momentum);
  auto* o_wd = tc->add_option("--weight-decay", train_cfg.sgd.weight_decay);
  auto* o_bs = tc->add_option("--batch-size", train_cfg.batch_size);
  auto* o_views = tc->add_option("--views", train_cfg.views);
  auto* o_lambda = tc->add_option("--lambda", train_cfg.lambda_i);
  auto* o_q = tc->add_option("--q", train_cfg.q);
  auto* o_eps = tc->add_option("--epsilon", train_cfg.alignment.epsilon);
  auto* o_theta = tc->add_option("--theta", train_cfg.alignment.theta);
  auto* o_iter = tc->add_option("--max-iter", train_cfg.alignment.max_iter);
  auto* o_delta = tc->add_option("--stop-delta", train_cfg.alignment.stop_delta);
  auto* o_reps = tc->add_option("--refine-epsilon", train_cfg.refine_epsilon);
  auto* o_pb = tc->add_flag("--refine-per-batch", train_cfg.refine_per_batch);
  auto* o_seed = tc->add_option("--seed", train_cfg.seed);

  // eval
  AlignmentConfig eval_align;
  std::string eval_bank;
  std::string eval_data;
  std::string eval_report;
  auto* eval = app.add_subcommand("eval", "Evaluate a prompt bank on a labelled test set");
  eval->add_option("--bank", eval_bank)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--report", eval_report, "Write the evaluation record to this file");
  add_alignment_flags(eval, eval_align);

  // refine
  AlignmentConfig refine_align;
  std::string refine_bank;
  std::string refine_data;
  std::string refine_out;
  double refine_eps = TrainConfig{}.refine_epsilon;
  auto* refine_cmd = app.add_subcommand("refine", "Partition and relabel a dataset with a fixed bank");
  refine_cmd->add_option("--bank", refine_bank)->required();
  refine_cmd->add_option("--data", refine_data)->required();
  refine_cmd->add_option("--out", refine_out, "Output directory (denoised.json, report.json)")->required();
  refine_cmd->add_option("--refine-epsilon", refine_eps)->capture_default_str();
  add_alignment_flags(refine_cmd, refine_align);

  // solve-ot
  std::string ot_cost;
  std::string ot_marginals;
  std::string ot_mode = "classical";
  std::string ot_out;
  double ot_eps = 0.1;
  double ot_theta = 0.9;
  ot::SolverOptions ot_opts;
  auto* solve = app.add_subcommand("solve-ot", "Solve an entropic OT or UOT problem from CSV input");
  solve->add_option("--cost", ot_cost, "CSV cost matrix")->required();
  solve->add_option("--marginals", ot_marginals, "CSV with two rows: mu, then nu (default: uniform)");
  solve->add_option("--mode", ot_mode)->check(CLI::IsMember({"classical", "unbalanced"}))->capture_default_str();
  solve->add_option("--epsilon", ot_eps)->capture_default_str();
  solve->add_option("--theta", ot_theta, "Mass of the default nu in unbalanced mode")->capture_default_str();
  solve->add_option("--max-iter", ot_opts.max_iter)->capture_default_str();
  solve->add_option("--tol", ot_opts.tol)->capture_default_str();
  solve->add_option("--out", ot_out, "Plan output file (default: stdout)");

  // export-plan
  AlignmentConfig export_align;
  std::string export_bank;
  std::string export_data;
  std::string export_out;
  std::string export_side = "clean";
  std::size_t export_sample = 0;
  std::size_t export_class = 0;
  auto* exp = app.add_subcommand("export-plan", "Export one sample's L x N patch/prompt transport plan");
  exp->add_option("--bank", export_bank)->required();
  exp->add_option("--data", export_data)->required();
  exp->add_option("--sample", export_sample)->required();
  exp->add_option("--class", export_class)->required();
  exp->add_option("--side", export_side)->check(CLI::IsMember({"clean", "noisy"}))->capture_default_str();
  exp->add_option("--out", export_out, "Plan output file (default: stdout)");
  add_alignment_flags(exp, export_align);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      gen_cfg.noise_kind = synth::parse_noise_kind(noise_kind);
      const auto ds = synth::gen_dataset(gen_cfg);
      io::write_dataset(ds, gen_out);
      out << "wrote " << ds.size() << " samples to " << gen_out << '\n';
    } else if (*train_cmd) {
      if (!train_config_file.empty()) {
        // Re-apply explicit flags on top of the file values.
        TrainConfig flags = train_cfg;
        io::apply_train_config_file(train_cfg, train_config_file);
        if (o_epochs->count()) train_cfg.epochs = flags.epochs;
        if (o_sup->count()) train_cfg.sup_epochs = flags.sup_epochs;
        if (o_lr->count()) train_cfg.sgd.learning_rate = flags.sgd.learning_rate;
        if (o_mom->count()) train_cfg.sgd.momentum = flags.sgd.momentum;
        if (o_wd->count()) train_cfg.sgd.weight_decay = flags.sgd.weight_decay;
        if (o_bs->count()) train_cfg.batch_size = flags.batch_size;
        if (o_views->count()) train_cfg.views = flags.views;
        if (o_lambda->count()) train_cfg.lambda_i = flags.lambda_i;
        if (o_q->count()) train_cfg.q = flags.q;
        if (o_eps->count()) train_cfg.alignment.epsilon = flags.alignment.epsilon;
        if (o_theta->count()) train_cfg.alignment.theta = flags.alignment.theta;
        if (o_iter->count()) train_cfg.alignment.max_iter = flags.alignment.max_iter;
        if (o_delta->count()) train_cfg.alignment.stop_delta = flags.alignment.stop_delta;
        if (o_reps->count()) train_cfg.refine_epsilon = flags.refine_epsilon;
        if (o_pb->count()) train_cfg.refine_per_batch = flags.refine_per_batch;
        if (o_seed->count()) train_cfg.seed = flags.seed;
      }
      const auto ds = io::read_dataset(train_data);
      const auto result = train(ds, train_cfg);
      const fs::path dir = train_out;
      io::write_bank(result.bank, dir / "bank.json");
      io::write_history(result.history, dir / "history.jsonl");
      const RefinementReport report = result.final_report.value_or(RefinementReport{});
      io::write_text(dir / "report.json", io::report_to_json(report) + "\n");
      out << io::report_to_json(report) << '\n';
    } else if (*eval) {
      const auto bank = io::read_bank(eval_bank);
      const auto ds = io::read_dataset(eval_data);
      const double acc = evaluate(bank, ds, eval_align);
      out << "accuracy " << io::format_real(acc) << '\n';
      if (!eval_report.empty()) {
        io::write_text(eval_report, "{\"accuracy\":" + io::format_real(acc) + ",\"num_samples\":" +
                                        std::to_string(ds.size()) + "}\n");
      }
    } else if (*refine_cmd) {
      const auto bank = io::read_bank(refine_bank);
      const auto ds = io::read_dataset(refine_data);
      TrainConfig cfg;
      cfg.alignment = refine_align;
      cfg.refine_epsilon = refine_eps;
      const auto pass = run_refinement(ds, bank, cfg);
      const RefinementReport report =
          ds.truth ? refinement_metrics(ds.labels, pass.denoised, *ds.truth) : refinement_counts(pass.denoised);
      const fs::path dir = refine_out;
      io::write_denoised(pass.denoised, dir / "denoised.json");
      io::write_text(dir / "report.json", io::report_to_json(report) + "\n");
      out << io::report_to_json(report) << '\n';
    } else if (*solve) {
      ot::TransportProblem p;
      p.cost = io::read_csv_matrix(ot_cost);
      p.epsilon = ot_eps;
      const bool unbalanced = ot_mode == "unbalanced";
      if (!ot_marginals.empty()) {
        const Matrix mm = io::read_csv_matrix(ot_marginals);
        if (mm.rows() != 2) throw Error(ErrorKind::ValidationError, "marginals file needs exactly two rows");
        p.mu.assign(mm.row(0).begin(), mm.row(0).end());
        p.nu.assign(mm.row(1).begin(), mm.row(1).end());
      } else {
        const double m = static_cast<double>(p.cost.rows());
        const double n = static_cast<double>(p.cost.cols());
        p.mu.assign(p.cost.rows(), 1.0 / m);
        p.nu.assign(p.cost.cols(), (unbalanced ? ot_theta : 1.0) / n);
      }
      const auto plan = unbalanced ? ot::dykstra_uot(p, ot_opts) : ot::sinkhorn_ot(p, ot_opts);
      emit(plan_text(plan, "# mode=" + ot_mode + "\n"), ot_out, out);
      if (!ot_out.empty()) {
        out << "objective " << io::format_real(plan.objective) << "\niterations " << plan.iterations
            << "\nconverged " << (plan.converged ? "true" : "false") << '\n';
      }
    } else if (*exp) {
      const auto bank = io::read_bank(export_bank);
      const auto ds = io::read_dataset(export_data);
      if (export_sample >= ds.size()) throw Error(ErrorKind::IndexMismatch, "--sample out of range");
      if (export_class >= bank.num_classes) throw Error(ErrorKind::LabelOutOfRange, "--class out of range");
      const Matrix& prompts = export_side == "clean" ? bank.clean[export_class] : bank.noisy[export_class];
      const auto d = uot_distance(ds.samples[export_sample].local, prompts, export_align);
      const std::string header = "# sample=" + std::to_string(export_sample) +
                                 " class=" + std::to_string(export_class) + " side=" + export_side + "\n";
      emit(plan_text(d.transport, header), export_out, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_numerical() ? kExitNumerical : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace namvp
