// Command-line front end. Every command prints one JSON object on stdout and
// exits nonzero (with {"error": ...}) when a contract is violated.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sfwm/sfwm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sfwm;

namespace {

struct options {
  std::string config, checkpoint, profile, out, manifest, attacker, watermark, identity = "default", dir;
  std::vector<std::string> images;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double fpr_budget = kDefaultFprBudget;
};

json read_json(const std::string& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw format_error("malformed JSON in " + path + ": " + e.what());
  }
}

// A run config is either a bare training config or {"training": {...},
// "manifest": "..."}; --seed overrides the stored seed.
training_config load_run_config(options& o) {
  json j = o.config.empty() ? json::object() : read_json(o.config);
  json t = j.contains("training") ? j.at("training") : j;
  if (j.contains("manifest") && o.manifest.empty()) o.manifest = j.at("manifest").get<std::string>();
  auto cfg = training_config_from_json(t);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

model_bundle load_model(const std::string& path, checkpoint_info& info) {
  if (path.empty()) throw parameter_error("--checkpoint is required");
  if (!fs::exists(path)) throw format_error("checkpoint not found: " + path);
  return load_checkpoint<float>(path, &info);
}

detection_profile load_profile(const std::string& path, const checkpoint_info& info) {
  if (path.empty()) throw parameter_error("--profile is required");
  auto p = profile_from_json(read_json(path));
  if (p.config_hash != info.config_hash)
    throw format_error("profile was calibrated for config " + p.config_hash + " but the checkpoint carries " +
                       info.config_hash);
  return p;
}

dataset_manifest need_manifest(const options& o) {
  if (o.manifest.empty()) throw parameter_error("--manifest is required");
  return load_manifest(o.manifest);
}

std::string require_out(const options& o) {
  if (o.out.empty()) throw parameter_error("--out is required");
  return o.out;
}

void write_json(const std::string& path, const json& j) { io::atomic_write(path, j.dump(2) + "\n"); }

json cmd_ingest(options& o) {
  if (o.dir.empty()) throw parameter_error("ingest needs a directory");
  const auto m = ingest(o.dir, o.seed.value_or(0));
  for (const auto& s : m.skipped) std::cerr << "warning: skipped " << s << "\n";
  const auto out = require_out(o);
  save_manifest(out, m);
  auto j = to_json(m);
  j.erase("files");
  j["manifest"] = out;
  return j;
}

json cmd_train(options& o) {
  const auto cfg = load_run_config(o);
  const auto m = need_manifest(o);
  const auto out = require_out(o);
  const auto train_set = load_split(m, split::train, cfg.image_size);
  const auto val_set = load_split(m, split::val, cfg.image_size);
  const std::string log_path = out + ".log.jsonl";
  std::ofstream log(log_path, std::ios::trunc);
  training_log_sink sink{[&](const json& rec) { log << rec.dump() << "\n"; }};
  auto res = train(train_set, val_set, cfg, sink);
  const auto hash = config_hash(cfg);
  save_checkpoint(res.bundle, out, hash);
  return {{"checkpoint", out},       {"config_hash", hash},       {"log", log_path},
          {"steps", res.steps},      {"best_epoch", res.best_epoch}, {"best_validation", res.best_validation},
          {"manifest_hash", m.content_hash()}};
}

watermark resolve_watermark(const options& o, const checkpoint_info& info) {
  if (!o.watermark.empty()) return watermark::parse(o.watermark, info.model.watermark_bits);
  if (!o.profile.empty()) {
    const auto p = load_profile(o.profile, info);
    if (p.identity != o.identity) throw parameter_error("profile holds identity '" + p.identity + "'");
    return p.ground_truth;
  }
  throw parameter_error("embed needs --watermark or --profile");
}

json cmd_embed(options& o) {
  checkpoint_info info;
  auto b = load_model(o.checkpoint, info);
  const auto wm = resolve_watermark(o, info);
  if (o.images.size() != 1) throw parameter_error("embed takes exactly one image");
  const auto out = require_out(o);
  const auto img = load_image(o.images[0]);
  const auto marked = embed(b, {img}, {wm})[0];
  save_image(out, marked);
  return {{"output", out}, {"watermark", wm.to_string()}, {"ssim", ssim(img, quantize8(marked))},
          {"config_hash", info.config_hash}};
}

json cmd_extract(options& o) {
  checkpoint_info info;
  auto b = load_model(o.checkpoint, info);
  if (o.images.empty()) throw parameter_error("extract needs at least one image");
  json results = json::array();
  for (const auto& path : o.images) {
    const auto logits = extract(b, {load_image(path)})[0];
    results.push_back({{"image", path}, {"bits", harden(logits).to_string()}, {"logits", logits.values}});
  }
  return {{"config_hash", info.config_hash}, {"results", results}};
}

json cmd_calibrate(options& o) {
  checkpoint_info info;
  auto b = load_model(o.checkpoint, info);
  const auto m = need_manifest(o);
  const auto out = require_out(o);
  const std::size_t size = load_run_config(o).image_size;
  watermark gt;
  if (!o.watermark.empty()) {
    gt = watermark::parse(o.watermark, info.model.watermark_bits);
  } else {
    rng_t rng(o.seed.value_or(0));
    gt = watermark::random(rng, info.model.watermark_bits);
  }
  std::vector<double> neg;
  auto p = calibrate_profile(b, load_split(m, split::val, size), gt, info.config_hash, o.fpr_budget, &neg);
  p.identity = o.identity;
  write_json(out, to_json(p));
  auto j = to_json(p);
  j["profile"] = out;
  j["calibration_fpr"] = false_positive_rate(neg, p.threshold);
  return j;
}

json cmd_detect(options& o) {
  checkpoint_info info;
  auto b = load_model(o.checkpoint, info);
  const auto p = load_profile(o.profile, info);
  if (o.images.empty()) throw parameter_error("detect needs at least one image");
  std::vector<image> imgs;
  for (const auto& path : o.images) imgs.push_back(load_image(path));
  const auto ds = detect(b, imgs, p);
  json results = json::array();
  for (std::size_t i = 0; i < ds.size(); ++i)
    results.push_back({{"image", o.images[i]},
                       {"verdict", verdict_name(ds[i].result)},
                       {"bitacc", ds[i].bitacc},
                       {"extracted", ds[i].extracted.to_string()}});
  return {{"threshold", p.threshold}, {"identity", p.identity}, {"results", results}};
}

json cmd_sweep(options& o) {
  checkpoint_info info;
  auto b = load_model(o.checkpoint, info);
  const auto p = load_profile(o.profile, info);
  const auto m = need_manifest(o);
  const auto out = require_out(o);
  const std::size_t size = load_run_config(o).image_size;
  const auto test = load_split(m, split::test, size);
  const auto rep = robustness_sweep(b, test, p.ground_truth, p.threshold);
  auto j = to_json(rep);
  j["config_hash"] = info.config_hash;
  json proxies = json::array();
  for (const auto& px : {manipulation_proxy::region_replace(0.6), manipulation_proxy::region_replace(1.0),
                         manipulation_proxy::piecewise_warp(3.0)})
    proxies.push_back(to_json(fragility_probe(b, test, p.ground_truth, px, p.threshold, o.seed.value_or(0))));
  j["proxies"] = proxies;
  write_json(out, j);
  io::atomic_write(out + ".csv", to_csv(rep));
  io::atomic_write(out + ".jpeg.svg", jpeg_curve_svg(rep));
  return {{"report", out}, {"csv", out + ".csv"}, {"svg", out + ".jpeg.svg"},
          {"grid_mean_bitacc", rep.grid_mean_bitacc}, {"mean_ssim_watermarked", rep.mean_ssim_watermarked}};
}

json cmd_ablate(options& o) {
  const auto base = load_run_config(o);
  const auto m = need_manifest(o);
  const auto out = require_out(o);
  const auto train_set = load_split(m, split::train, base.image_size);
  const auto val = load_split(m, split::val, base.image_size);
  const auto test = load_split(m, split::test, base.image_size);
  rng_t rng(base.seed);
  const auto gt = watermark::random(rng, base.watermark_len);
  train_function fn = [&](const training_config& cfg) { return train(train_set, val, cfg).bundle; };
  const auto rep = ablation_suite(fn, base, o.seeds, val, test, gt);
  const auto j = to_json(rep);
  write_json(out, j);
  return {{"report", out}, {"summary", j.at("summary")}};
}

json cmd_attack(options& o) {
  checkpoint_info info;
  auto defender = load_model(o.checkpoint, info);
  const auto p = load_profile(o.profile, info);
  const auto m = need_manifest(o);
  const auto out = require_out(o);
  const auto cfg = load_run_config(o);
  const auto test = load_split(m, split::test, cfg.image_size);
  model_bundle attacker;
  if (!o.attacker.empty()) {
    checkpoint_info ai;
    attacker = load_model(o.attacker, ai);
  } else {
    attacker = train(load_split(m, split::train, cfg.image_size), load_split(m, split::val, cfg.image_size), cfg).bundle;
  }
  const auto rep = adaptive_attack_eval(defender, attacker, p, test, o.seed.value_or(0));
  const auto j = to_json(rep);
  write_json(out, j);
  return {{"report", out}, {"metrics", j.at("metrics")}};
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads();
  CLI::App app{"Semi-fragile watermark toolkit"};
  app.require_subcommand(1);
  options o;
  std::uint64_t seed = 0;
  auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "run configuration (JSON)");
    c->add_option("--seed", seed, "seed")->each([&](const std::string&) { o.seed = seed; });
    c->add_option("--checkpoint", o.checkpoint, "model checkpoint");
    c->add_option("--profile", o.profile, "detection profile (JSON)");
    c->add_option("--out", o.out, "output path");
    c->add_option("--manifest", o.manifest, "dataset manifest (JSON)");
  };
  auto* ingest_cmd = app.add_subcommand("ingest", "scan a directory of PNG/PPM images into a split manifest");
  common(ingest_cmd);
  ingest_cmd->add_option("dir", o.dir)->required();
  auto* train_cmd = app.add_subcommand("train", "train encoder, decoder and discriminator");
  common(train_cmd);
  auto* embed_cmd = app.add_subcommand("embed", "watermark one image");
  common(embed_cmd);
  embed_cmd->add_option("--watermark", o.watermark, "binary, 0b... or 0x... string");
  embed_cmd->add_option("--identity", o.identity, "identity held in --profile");
  embed_cmd->add_option("image", o.images)->required();
  auto* extract_cmd = app.add_subcommand("extract", "decode watermark bits and logits");
  common(extract_cmd);
  extract_cmd->add_option("images", o.images)->required();
  auto* calibrate_cmd = app.add_subcommand("calibrate", "pick the detection threshold on validation negatives");
  common(calibrate_cmd);
  calibrate_cmd->add_option("--watermark", o.watermark, "ground-truth watermark (random from --seed otherwise)");
  calibrate_cmd->add_option("--identity", o.identity, "identity label");
  calibrate_cmd->add_option("--fpr-budget", o.fpr_budget, "false-positive budget");
  auto* detect_cmd = app.add_subcommand("detect", "real/fake verdicts");
  common(detect_cmd);
  detect_cmd->add_option("images", o.images)->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "robustness sweep and proxy probes on the test split");
  common(sweep_cmd);
  auto* ablate_cmd = app.add_subcommand("ablate", "train and compare the four ablation variants");
  common(ablate_cmd);
  ablate_cmd->add_option("--seeds", o.seeds, "training seeds");
  auto* attack_cmd = app.add_subcommand("attack", "adaptive attacker evaluation");
  common(attack_cmd);
  attack_cmd->add_option("--attacker", o.attacker, "attacker checkpoint (trained from --config/--seed otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    json result;
    if (*ingest_cmd) result = cmd_ingest(o);
    else if (*train_cmd) result = cmd_train(o);
    else if (*embed_cmd) result = cmd_embed(o);
    else if (*extract_cmd) result = cmd_extract(o);
    else if (*calibrate_cmd) result = cmd_calibrate(o);
    else if (*detect_cmd) result = cmd_detect(o);
    else if (*sweep_cmd) result = cmd_sweep(o);
    else if (*ablate_cmd) result = cmd_ablate(o);
    else if (*attack_cmd) result = cmd_attack(o);
    result["ok"] = true;
    std::cout << result.dump(2) << std::endl;
    return 0;
  } catch (const std::exception& e) {
    std::cout << json{{"ok", false}, {"error", e.what()}}.dump(2) << std::endl;
    return 1;
  }
}
