// plumepipe: hyperspectral methane-plume pipeline front end.
// Subcommands wire the library stages into reproducible runs driven by one
// JSON config; every stage writes a provenance record and is resumable.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plumepipe/cube.hpp"
#include "plumepipe/dataset.hpp"
#include "plumepipe/error.hpp"
#include "plumepipe/eval.hpp"
#include "plumepipe/geometry.hpp"
#include "plumepipe/glt.hpp"
#include "plumepipe/hsc.hpp"
#include "plumepipe/matched_filter.hpp"
#include "plumepipe/parallel.hpp"
#include "plumepipe/rng.hpp"
#include "plumepipe/synth.hpp"
#include "plumepipe/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plumepipe;

namespace {

// ---------------------------------------------------------------- logging

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level_from_env() {
  const char* env = std::getenv("PLUMEPIPE_LOG");
  if (!env) return LogLevel::Info;
  std::string v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "warn") return LogLevel::Warn;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

LogLevel g_log = log_level_from_env();

void log_msg(LogLevel lvl, const std::string& msg) {
  if (lvl > g_log) return;
  const char* tag = lvl == LogLevel::Error  ? "error"
                    : lvl == LogLevel::Warn ? "warn"
                    : lvl == LogLevel::Info ? "info"
                                            : "debug";
  std::fprintf(stderr, "plumepipe: [%s] %s\n", tag, msg.c_str());
}

// ---------------------------------------------------------------- context

struct Ctx {
  json config = json::object();
  fs::path out = "plumepipe_out";
  std::uint64_t seed = 0;
  bool seed_overridden = false;
  int workers = 0;  // 0 = logical CPUs
  double strong_threshold = 900.0;
  bool threshold_overridden = false;
  bool force = false;

  json section(const std::string& name) const {
    if (config.contains(name) && config[name].is_object()) return config[name];
    return json::object();
  }
};

void load_config(Ctx& ctx, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::ConfigError, "cannot open config " + path);
  ctx.config = json::parse(f, nullptr, false);
  if (ctx.config.is_discarded())
    throw Error(Errc::ConfigError, path + " is not valid JSON");
  if (ctx.config.contains("out") && ctx.out == "plumepipe_out")
    ctx.out = ctx.config["out"].get<std::string>();
  if (ctx.config.contains("seed") && !ctx.seed_overridden)
    ctx.seed = ctx.config["seed"].get<std::uint64_t>();
  if (ctx.config.contains("workers") && ctx.workers == 0)
    ctx.workers = ctx.config["workers"].get<int>();
  if (ctx.config.contains("threshold_ppm_m") && !ctx.threshold_overridden)
    ctx.strong_threshold = ctx.config["threshold_ppm_m"].get<double>();
}

// ---------------------------------------------------------------- hashing

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string hash_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  std::uint64_t h = 0xCBF29CE484222325ull;
  char buf[65536];
  while (f.read(buf, sizeof buf) || f.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(f.gcount()), h);
  return hex64(h);
}

std::string hash_string(const std::string& s) { return hex64(fnv1a64(s)); }

// Provenance for single-file conversions: written next to the output.
void write_file_provenance(const std::string& subcommand,
                           const std::vector<std::string>& inputs,
                           const fs::path& output) {
  json j;
  j["tool_version"] = kVersion;
  j["subcommand"] = subcommand;
  json in = json::object();
  for (const std::string& p : inputs) in[p] = hash_file(p);
  j["inputs"] = in;
  j["outputs"][output.string()] = hash_file(output);
  std::ofstream f(output.string() + ".prov.json", std::ios::trunc);
  f << j.dump(2) << "\n";
}

// ------------------------------------------------------------- provenance

// A stage is a no-op when its provenance record matches the effective config,
// the input hashes, and every recorded output still hashes the same.
struct Stage {
  const Ctx& ctx;
  std::string name;
  std::string config_hash;
  std::map<std::string, std::string> inputs;  // path -> hash
  std::vector<fs::path> outputs;

  Stage(const Ctx& c, std::string n, const json& effective)
      : ctx(c), name(std::move(n)), config_hash(hash_string(effective.dump())) {}

  void add_input(const fs::path& p) { inputs[p.string()] = hash_file(p); }

  fs::path record_path() const { return ctx.out / (name + ".provenance.json"); }

  bool up_to_date() const {
    if (ctx.force) return false;
    std::ifstream f(record_path());
    if (!f) return false;
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) return false;
    if (j.value("config_hash", "") != config_hash) return false;
    if (j.value("tool_version", "") != std::string(kVersion)) return false;
    json in = j.value("inputs", json::object());
    if (in.size() != inputs.size()) return false;
    for (const auto& [p, h] : inputs)
      if (!in.contains(p) || in[p] != h) return false;
    json outs = j.value("outputs", json::object());
    for (const auto& [p, h] : outs.items()) {
      if (!h.is_string() || !fs::exists(p)) return false;
      if (hash_file(p) != h.get<std::string>()) return false;
    }
    return true;
  }

  void commit() const {
    json j;
    j["tool_version"] = kVersion;
    j["subcommand"] = name;
    j["config_hash"] = config_hash;
    j["inputs"] = inputs;
    json outs = json::object();
    for (const fs::path& p : outputs) outs[p.string()] = hash_file(p);
    j["outputs"] = outs;
    std::ofstream f(record_path(), std::ios::trunc);
    f << j.dump(2) << "\n";
  }
};

// ---------------------------------------------------------- image registry

struct ImageEntry {
  std::string id;
  std::string cube;       // radiance (band-subset) cube; mf input
  std::string cube_norm;  // normalized cube; optional tile payload source
  std::string glt;
  std::string ortho_mask;
  std::string ortho_enh;
  std::string mask;         // source-plane annotation mask (tile input)
  std::string enhancement;  // source-plane enhancement (tile input)
  std::string pred_mask;    // per-image prediction raster (eval input)
};

std::string entry_get(const json& j, const char* key) {
  return j.contains(key) ? j[key].get<std::string>() : std::string();
}

std::vector<ImageEntry> parse_images(const json& arr, const fs::path& base) {
  std::vector<ImageEntry> out;
  auto resolve = [&](const std::string& p) -> std::string {
    if (p.empty()) return p;
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  for (const auto& j : arr) {
    ImageEntry e;
    e.id = j.at("id").get<std::string>();
    e.cube = resolve(entry_get(j, "cube"));
    e.cube_norm = resolve(entry_get(j, "cube_norm"));
    e.glt = resolve(entry_get(j, "glt"));
    e.ortho_mask = resolve(entry_get(j, "ortho_mask"));
    e.ortho_enh = resolve(entry_get(j, "ortho_enh"));
    e.mask = resolve(entry_get(j, "mask"));
    e.enhancement = resolve(entry_get(j, "enhancement"));
    e.pred_mask = resolve(entry_get(j, "pred_mask"));
    out.push_back(std::move(e));
  }
  return out;
}

// Merges b's non-empty fields over a.
ImageEntry merge_entry(ImageEntry a, const ImageEntry& b) {
  auto take = [](std::string& dst, const std::string& src) {
    if (!src.empty()) dst = src;
  };
  take(a.cube, b.cube);
  take(a.cube_norm, b.cube_norm);
  take(a.glt, b.glt);
  take(a.ortho_mask, b.ortho_mask);
  take(a.ortho_enh, b.ortho_enh);
  take(a.mask, b.mask);
  take(a.enhancement, b.enhancement);
  take(a.pred_mask, b.pred_mask);
  return a;
}

std::vector<ImageEntry> merge_image_lists(std::vector<ImageEntry> base,
                                          const std::vector<ImageEntry>& over) {
  for (const ImageEntry& o : over) {
    bool found = false;
    for (ImageEntry& b : base)
      if (b.id == o.id) {
        b = merge_entry(b, o);
        found = true;
        break;
      }
    if (!found) base.push_back(o);
  }
  return base;
}

std::vector<ImageEntry> registry_images(const Ctx& ctx) {
  fs::path reg = ctx.out / "images.json";
  std::ifstream f(reg);
  if (!f) return {};
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded())
    throw Error(Errc::FormatError, reg.string() + " is not valid JSON");
  return parse_images(j, ctx.out);
}

// Effective image list: entries from the config overlaid with whatever the
// pipeline stages have recorded in the out-dir registry.
std::vector<ImageEntry> load_images(const Ctx& ctx) {
  std::vector<ImageEntry> from_config;
  if (ctx.config.contains("images") && ctx.config["images"].is_array())
    from_config = parse_images(ctx.config["images"], fs::current_path());
  auto merged = merge_image_lists(std::move(from_config), registry_images(ctx));
  if (merged.empty())
    throw Error(Errc::ConfigError,
                "no images in config and no registry at " +
                    (ctx.out / "images.json").string() +
                    " (run synth or list images in the config)");
  return merged;
}

// Registry file paths are stored relative to the out dir so two runs with
// different out roots produce identical bytes everywhere else. Stages only
// add or refresh the fields they produce; other fields are preserved.
void save_images(const Ctx& ctx, const std::vector<ImageEntry>& updates) {
  auto merged = merge_image_lists(registry_images(ctx), updates);
  auto rel = [&](const std::string& p) -> std::string {
    if (p.empty()) return p;
    return fs::relative(p, ctx.out).generic_string();
  };
  json arr = json::array();
  for (const ImageEntry& e : merged) {
    json j;
    j["id"] = e.id;
    if (!e.cube.empty()) j["cube"] = rel(e.cube);
    if (!e.cube_norm.empty()) j["cube_norm"] = rel(e.cube_norm);
    if (!e.glt.empty()) j["glt"] = rel(e.glt);
    if (!e.ortho_mask.empty()) j["ortho_mask"] = rel(e.ortho_mask);
    if (!e.ortho_enh.empty()) j["ortho_enh"] = rel(e.ortho_enh);
    if (!e.mask.empty()) j["mask"] = rel(e.mask);
    if (!e.enhancement.empty()) j["enhancement"] = rel(e.enhancement);
    if (!e.pred_mask.empty()) j["pred_mask"] = rel(e.pred_mask);
    arr.push_back(std::move(j));
  }
  std::ofstream f(ctx.out / "images.json", std::ios::trunc);
  f << arr.dump(2) << "\n";
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::exists(path))
    throw Error(Errc::ConfigError,
                what + " not found: " + (path.empty() ? "(unset)" : path));
}

// ------------------------------------------------------------ param parsing

TilingParams tiling_params(const Ctx& ctx) {
  json t = ctx.section("tiling");
  TilingParams p;
  p.size = t.value("size", 128);
  p.stride = t.value("stride", p.size);
  p.min_valid_frac = t.value("min_valid_frac", 0.8);
  p.strong_threshold_ppm_m = ctx.strong_threshold;
  return p;
}

JitterParams jitter_params(const Ctx& ctx) {
  json j = ctx.section("jitter");
  JitterParams p;
  p.samples_per_tile = j.value("samples_per_tile", 4);
  p.max_offset = j.value("max_offset", 32);
  p.include_negatives = j.value("include_negatives", false);
  if (j.contains("offsets") && j["offsets"].is_array())
    for (const auto& o : j["offsets"])
      p.offsets.emplace_back(o[0].get<int>(), o[1].get<int>());
  return p;
}

BandSelection band_selection(const Ctx& ctx) {
  json b = ctx.section("band_selection");
  BandSelection sel;
  if (b.contains("ranges_nm"))
    for (const auto& r : b["ranges_nm"])
      sel.ranges_nm.emplace_back(r[0].get<double>(), r[1].get<double>());
  else
    sel.ranges_nm = {{1573.0, 1699.0}, {2004.0, 2478.0}};
  if (b.contains("rgb_targets_nm"))
    sel.rgb_targets_nm = b["rgb_targets_nm"].get<std::vector<double>>();
  else
    sel.rgb_targets_nm = {462.0, 550.0, 640.0};
  if (b.contains("expected_count") && !b["expected_count"].is_null())
    sel.expected_count = b["expected_count"].get<int>();
  return sel;
}

// ------------------------------------------------------------- stats file

void write_stats_json(const fs::path& path, const BandStats& st,
                      const std::vector<double>& wavelengths,
                      const std::string& scope) {
  json j;
  j["wavelengths_nm"] = wavelengths;
  j["mean"] = st.mean;
  j["stddev"] = st.stddev;
  j["pixel_count"] = st.pixel_count;
  j["scope"] = scope;
  std::ofstream f(path, std::ios::trunc);
  f << j.dump(2) << "\n";
}

BandStats read_stats_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded())
    throw Error(Errc::FormatError, path.string() + " is not valid JSON");
  BandStats st;
  st.mean = j.at("mean").get<std::vector<double>>();
  st.stddev = j.at("stddev").get<std::vector<double>>();
  st.pixel_count = j.at("pixel_count").get<std::uint64_t>();
  return st;
}

// ---------------------------------------------------------------- reports

json metrics_to_json(const MetricsReport& r) {
  json j;
  j["counts"] = {{"tp", r.counts.tp},
                 {"fp", r.counts.fp},
                 {"fn", r.counts.fn},
                 {"tn", r.counts.tn}};
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  if (r.task == Task::Classification) j["accuracy"] = r.accuracy;
  if (r.task == Task::Segmentation) j["iou"] = r.iou;
  return j;
}

std::string csv_threshold(Stratum s, double thr) {
  char buf[40];
  if (s == Stratum::All) return "N/A";
  std::snprintf(buf, sizeof buf, s == Stratum::Strong ? ">= %g" : "< %g", thr);
  return buf;
}

// ------------------------------------------------------------ subcommands

int cmd_synth(Ctx& ctx, const std::string& scene_file) {
  std::vector<json> scene_specs;
  if (!scene_file.empty()) {
    std::ifstream f(scene_file);
    if (!f) throw Error(Errc::ConfigError, "cannot open " + scene_file);
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded())
      throw Error(Errc::ConfigError, scene_file + " is not valid JSON");
    if (j.is_array())
      for (const auto& s : j) scene_specs.push_back(s);
    else
      scene_specs.push_back(j);
  } else {
    json s = ctx.section("synth");
    if (s.contains("scenes"))
      for (const auto& sc : s["scenes"]) scene_specs.push_back(sc);
    else if (!s.empty())
      scene_specs.push_back(s);
  }
  if (scene_specs.empty())
    throw Error(Errc::ConfigError, "no scene specs (config.synth or --scene)");

  json effective = json::array();
  for (auto& s : scene_specs) effective.push_back(s);
  Stage stage(ctx, "synth", effective);
  if (!scene_file.empty()) stage.add_input(scene_file);

  std::vector<SceneSpec> specs;
  for (std::size_t i = 0; i < scene_specs.size(); ++i) {
    SceneSpec spec = scene_spec_from_json(scene_specs[i]);
    if (spec.id == "scene" && scene_specs.size() > 1)
      spec.id = "scene" + std::to_string(i);
    if (!scene_specs[i].contains("seed"))
      spec.seed = substream_seed(ctx.seed, spec.id);
    specs.push_back(std::move(spec));
  }

  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "synth: up to date, nothing to do");
    return 0;
  }

  std::vector<ImageEntry> images(specs.size());
  std::vector<std::vector<fs::path>> outs(specs.size());
  parallel_for(specs.size(), ctx.workers, [&](std::size_t i) {
    const SceneSpec& spec = specs[i];
    fs::path dir = ctx.out / "images" / spec.id;
    fs::create_directories(dir);

    Scene scene = gen_scene(spec);
    Glt glt = gen_glt(spec);
    HyperCube ortho_mask = orthorectify(scene.mask, glt);
    HyperCube ortho_enh = orthorectify(scene.enhancement, glt);

    write_hsc((dir / "cube.hsc").string(), scene.cube);
    write_glt((dir / "scene.glt").string(), glt);
    write_hsc((dir / "src_mask.hsc").string(), scene.mask);
    write_hsc((dir / "src_enh.hsc").string(), scene.enhancement,
              {{"units", "ppm_m"}});
    write_hsc((dir / "ortho_mask.hsc").string(), ortho_mask);
    write_hsc((dir / "ortho_enh.hsc").string(), ortho_enh,
              {{"units", "ppm_m"}});
    write_signature((dir / "signature.txt").string(), spec.signature());

    ImageEntry e;
    e.id = spec.id;
    e.cube = (dir / "cube.hsc").string();
    e.glt = (dir / "scene.glt").string();
    e.ortho_mask = (dir / "ortho_mask.hsc").string();
    e.ortho_enh = (dir / "ortho_enh.hsc").string();
    images[i] = std::move(e);
    for (const char* f : {"cube.hsc", "scene.glt", "src_mask.hsc",
                          "src_enh.hsc", "ortho_mask.hsc", "ortho_enh.hsc",
                          "signature.txt"})
      outs[i].push_back(dir / f);
  });

  // the first scene's signature doubles as the default for the mf stage
  fs::copy_file(ctx.out / "images" / specs[0].id / "signature.txt",
                ctx.out / "signature.txt", fs::copy_options::overwrite_existing);
  save_images(ctx, images);

  for (auto& v : outs)
    for (auto& p : v) stage.outputs.push_back(p);
  stage.outputs.push_back(ctx.out / "signature.txt");
  stage.commit();
  log_msg(LogLevel::Info,
          "synth: wrote " + std::to_string(specs.size()) + " scene(s)");
  return 0;
}

int cmd_ortho_unortho(Ctx& ctx, bool forward, const std::string& in,
                      const std::string& glt_path, const std::string& out_file,
                      const std::string& combine_name) {
  const CombineRule rule = combine_rule_from_string(combine_name);
  const int margin = ctx.section("unortho").value("margin", 0);

  if (!in.empty() || !out_file.empty() || !glt_path.empty()) {
    require_file(in, "input raster");
    require_file(glt_path, "GLT");
    if (out_file.empty())
      throw Error(Errc::ConfigError, "file mode needs --out-file");
    auto raster = read_hsc(in);
    auto glt = read_glt(glt_path);
    auto result = forward ? orthorectify(raster, glt)
                          : unorthorectify(raster, glt, rule, margin);
    write_hsc(out_file, result);
    write_file_provenance(forward ? "ortho" : "unortho", {in, glt_path},
                          out_file);
    return 0;
  }

  if (forward)
    throw Error(Errc::ConfigError,
                "ortho runs in file mode: --in, --glt, --out-file");

  // unortho over the registry: bring ortho annotations into the source plane
  auto images = load_images(ctx);
  json effective = ctx.section("unortho");
  effective["combine_mask"] = "union";
  effective["combine_enh"] = "max";
  Stage stage(ctx, "unortho", effective);
  for (const ImageEntry& e : images) {
    require_file(e.glt, "GLT for image " + e.id);
    require_file(e.ortho_mask, "ortho mask for image " + e.id);
    require_file(e.ortho_enh, "ortho enhancement for image " + e.id);
    stage.add_input(e.glt);
    stage.add_input(e.ortho_mask);
    stage.add_input(e.ortho_enh);
  }
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "unortho: up to date, nothing to do");
    return 0;
  }

  std::vector<std::array<fs::path, 2>> outs(images.size());
  parallel_for(images.size(), ctx.workers, [&](std::size_t i) {
    ImageEntry& e = images[i];
    fs::path dir = ctx.out / "images" / e.id;
    fs::create_directories(dir);
    auto glt = read_glt(e.glt);
    auto mask =
        unorthorectify(read_hsc(e.ortho_mask), glt, CombineRule::Union, margin);
    auto enh =
        unorthorectify(read_hsc(e.ortho_enh), glt, CombineRule::Max, margin);
    write_hsc((dir / "unortho_mask.hsc").string(), mask);
    write_hsc((dir / "unortho_enh.hsc").string(), enh, {{"units", "ppm_m"}});
    e.mask = (dir / "unortho_mask.hsc").string();
    e.enhancement = (dir / "unortho_enh.hsc").string();
    outs[i] = {dir / "unortho_mask.hsc", dir / "unortho_enh.hsc"};
  });
  save_images(ctx, images);
  for (auto& pair : outs) {
    stage.outputs.push_back(pair[0]);
    stage.outputs.push_back(pair[1]);
  }
  stage.commit();
  log_msg(LogLevel::Info,
          "unortho: processed " + std::to_string(images.size()) + " image(s)");
  return 0;
}

int cmd_bands(Ctx& ctx, const std::string& in, const std::string& out_file) {
  BandSelection sel = band_selection(ctx);
  if (!in.empty()) {
    require_file(in, "input cube");
    if (out_file.empty())
      throw Error(Errc::ConfigError, "file mode needs --out-file");
    write_hsc(out_file, select_bands(read_hsc(in), sel));
    write_file_provenance("bands", {in}, out_file);
    return 0;
  }
  auto images = load_images(ctx);
  Stage stage(ctx, "bands", ctx.section("band_selection"));
  for (const ImageEntry& e : images) {
    require_file(e.cube, "cube for image " + e.id);
    stage.add_input(e.cube);
  }
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "bands: up to date, nothing to do");
    return 0;
  }
  std::vector<fs::path> outs(images.size());
  parallel_for(images.size(), ctx.workers, [&](std::size_t i) {
    ImageEntry& e = images[i];
    fs::path dir = ctx.out / "images" / e.id;
    fs::create_directories(dir);
    write_hsc((dir / "cube_bands.hsc").string(),
              select_bands(read_hsc(e.cube), sel));
    e.cube = (dir / "cube_bands.hsc").string();
    outs[i] = dir / "cube_bands.hsc";
  });
  save_images(ctx, images);
  for (auto& p : outs) stage.outputs.push_back(p);
  stage.commit();
  return 0;
}

int cmd_split(Ctx& ctx) {
  auto images = load_images(ctx);
  json cfg = ctx.section("split");
  std::array<double, 3> fractions{0.80, 0.15, 0.05};
  if (cfg.contains("fractions")) {
    auto f = cfg["fractions"].get<std::vector<double>>();
    if (f.size() != 3)
      throw Error(Errc::ConfigError, "split.fractions needs 3 entries");
    fractions = {f[0], f[1], f[2]};
  }
  json effective = cfg;
  effective["seed"] = ctx.seed;
  for (const ImageEntry& e : images) effective["ids"].push_back(e.id);
  Stage stage(ctx, "split", effective);
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "split: up to date, nothing to do");
    return 0;
  }
  std::vector<std::string> ids;
  for (const ImageEntry& e : images) ids.push_back(e.id);
  auto manifest = split_images(ids, ctx.seed, fractions);
  write_split_manifest((ctx.out / "split.json").string(), manifest);
  stage.outputs.push_back(ctx.out / "split.json");
  stage.commit();
  log_msg(LogLevel::Info,
          "split: train " + std::to_string(manifest.train.size()) + ", val " +
              std::to_string(manifest.val.size()) + ", test " +
              std::to_string(manifest.test.size()));
  return 0;
}

int cmd_stats(Ctx& ctx, const std::string& scope_flag) {
  auto images = load_images(ctx);
  json cfg = ctx.section("normalize");
  std::string scope =
      scope_flag.empty() ? cfg.value("stats_scope", std::string("train"))
                         : scope_flag;
  std::optional<SplitManifest> split;
  if (scope != "all") {
    fs::path sp = ctx.out / "split.json";
    require_file(sp.string(), "split manifest (run split first)");
    split = read_split_manifest(sp.string());
  }

  json effective;
  effective["scope"] = scope;
  Stage stage(ctx, "stats", effective);
  std::vector<const ImageEntry*> selected;
  for (const ImageEntry& e : images) {
    if (split && split->split_of(e.id) != scope) continue;
    require_file(e.cube, "cube for image " + e.id);
    selected.push_back(&e);
  }
  if (selected.empty())
    throw Error(Errc::ConfigError, "no images in scope '" + scope + "'");
  for (auto* e : selected) stage.add_input(e->cube);
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "stats: up to date, nothing to do");
    return 0;
  }

  std::vector<HyperCube> cubes;
  for (auto* e : selected) cubes.push_back(read_hsc(e->cube));
  std::vector<const HyperCube*> ptrs;
  for (auto& c : cubes) ptrs.push_back(&c);
  auto st = band_stats(ptrs);
  write_stats_json(ctx.out / "stats.json", st, cubes.front().wavelengths_nm,
                   scope);
  stage.outputs.push_back(ctx.out / "stats.json");
  stage.commit();
  log_msg(LogLevel::Info, "stats: " + std::to_string(st.pixel_count) +
                              " valid pixels over " +
                              std::to_string(cubes.size()) + " cube(s)");
  return 0;
}

int cmd_normalize(Ctx& ctx, const std::string& in, const std::string& stats_path,
                  const std::string& out_file) {
  json cfg = ctx.section("normalize");
  const double eps = cfg.value("eps", 1e-6);
  fs::path stats_file =
      stats_path.empty() ? ctx.out / "stats.json" : fs::path(stats_path);

  if (!in.empty()) {
    require_file(in, "input cube");
    require_file(stats_file.string(), "stats file (run stats first)");
    if (out_file.empty())
      throw Error(Errc::ConfigError, "file mode needs --out-file");
    write_hsc(out_file,
              normalize(read_hsc(in), read_stats_json(stats_file), eps));
    write_file_provenance("normalize", {in, stats_file.string()}, out_file);
    return 0;
  }

  auto images = load_images(ctx);
  require_file(stats_file.string(), "stats file (run stats first)");
  Stage stage(ctx, "normalize", cfg);
  stage.add_input(stats_file);
  for (const ImageEntry& e : images) {
    require_file(e.cube, "cube for image " + e.id);
    stage.add_input(e.cube);
  }
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "normalize: up to date, nothing to do");
    return 0;
  }
  auto st = read_stats_json(stats_file);
  std::vector<fs::path> outs(images.size());
  parallel_for(images.size(), ctx.workers, [&](std::size_t i) {
    ImageEntry& e = images[i];
    fs::path dir = ctx.out / "images" / e.id;
    fs::create_directories(dir);
    write_hsc((dir / "cube_norm.hsc").string(),
              normalize(read_hsc(e.cube), st, eps));
    e.cube_norm = (dir / "cube_norm.hsc").string();
    outs[i] = dir / "cube_norm.hsc";
  });
  save_images(ctx, images);
  for (auto& p : outs) stage.outputs.push_back(p);
  stage.commit();
  return 0;
}

int cmd_tile(Ctx& ctx) {
  auto images = load_images(ctx);
  fs::path sp = ctx.out / "split.json";
  require_file(sp.string(), "split manifest (run split first)");
  auto split = read_split_manifest(sp.string());
  TilingParams tp = tiling_params(ctx);

  // tile payloads come from the radiance cube by default; "cube_norm"
  // selects the normalized one (run normalize first)
  const std::string source =
      ctx.section("tiling").value("source", std::string("cube"));
  if (source != "cube" && source != "cube_norm")
    throw Error(Errc::ConfigError, "tiling.source must be cube or cube_norm");
  for (ImageEntry& e : images)
    if (source == "cube_norm") {
      require_file(e.cube_norm,
                   "normalized cube for image " + e.id + " (run normalize)");
      e.cube = e.cube_norm;
    }

  json effective = ctx.section("tiling");
  effective["strong_threshold_ppm_m"] = tp.strong_threshold_ppm_m;
  Stage stage(ctx, "tile", effective);
  stage.add_input(sp);
  for (const ImageEntry& e : images) {
    require_file(e.cube, "cube for image " + e.id);
    require_file(e.mask, "annotation mask for image " + e.id +
                             " (run unortho or set images[].mask)");
    require_file(e.enhancement, "enhancement for image " + e.id);
    stage.add_input(e.cube);
    stage.add_input(e.mask);
    stage.add_input(e.enhancement);
  }
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "tile: up to date, nothing to do");
    return 0;
  }

  fs::path tiles_dir = ctx.out / "tiles";
  fs::path shards_dir = tiles_dir / "shards";
  fs::create_directories(shards_dir);

  std::vector<std::vector<Tile>> per_image(images.size());
  parallel_for(images.size(), ctx.workers, [&](std::size_t i) {
    const ImageEntry& e = images[i];
    auto cube = read_hsc(e.cube);
    auto mask = read_hsc(e.mask);
    auto enh = read_hsc(e.enhancement);
    auto tiles = tile_raster(e.id, cube, mask, enh, tp);
    std::string s = split.split_of(e.id);
    for (Tile& t : tiles) t.split = s;
    per_image[i] = std::move(tiles);
  });

  // shard writing is sequential in image order so manifests are stable
  std::map<std::string, std::ofstream> cube_shards, mask_shards;
  for (const char* s : {"train", "val", "test"}) {
    cube_shards[s].open(shards_dir / (std::string(s) + ".hsc"),
                        std::ios::binary | std::ios::trunc);
    mask_shards[s].open(shards_dir / (std::string(s) + "_mask.hsc"),
                        std::ios::binary | std::ios::trunc);
  }
  std::vector<Tile> all_tiles;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (per_image[i].empty()) continue;
    auto cube = read_hsc(images[i].cube);
    auto mask = read_hsc(images[i].mask);
    for (Tile& t : per_image[i]) {
      auto ccrop = crop(cube, t.row(), t.col(), t.size);
      auto mcrop = crop(mask, t.row(), t.col(), t.size);
      t.cube_path = "shards/" + t.split + ".hsc";
      t.mask_path = "shards/" + t.split + "_mask.hsc";
      t.cube_offset = append_hsc(cube_shards[t.split], ccrop);
      t.mask_offset = append_hsc(mask_shards[t.split], mcrop);
      all_tiles.push_back(t);
    }
  }
  write_tile_manifest((tiles_dir / "manifest.jsonl").string(), all_tiles);

  stage.outputs.push_back(tiles_dir / "manifest.jsonl");
  for (const char* s : {"train", "val", "test"}) {
    stage.outputs.push_back(shards_dir / (std::string(s) + ".hsc"));
    stage.outputs.push_back(shards_dir / (std::string(s) + "_mask.hsc"));
  }
  stage.commit();
  log_msg(LogLevel::Info, "tile: " + std::to_string(all_tiles.size()) +
                              " tiles across " + std::to_string(images.size()) +
                              " image(s)");
  return 0;
}

int cmd_jitter(Ctx& ctx) {
  auto images = load_images(ctx);
  fs::path manifest_path = ctx.out / "tiles" / "manifest.jsonl";
  require_file(manifest_path.string(), "tile manifest (run tile first)");
  TilingParams tp = tiling_params(ctx);

  // jittered payloads must come from the same source the tile stage used
  const std::string source =
      ctx.section("tiling").value("source", std::string("cube"));
  for (ImageEntry& e : images)
    if (source == "cube_norm") {
      require_file(e.cube_norm,
                   "normalized cube for image " + e.id + " (run normalize)");
      e.cube = e.cube_norm;
    }
  JitterParams jp = jitter_params(ctx);
  json jcfg = ctx.section("jitter");
  std::set<std::string> splits{"train", "val"};
  if (jcfg.contains("splits")) {
    splits.clear();
    for (const auto& s : jcfg["splits"]) splits.insert(s.get<std::string>());
  }

  json effective = jcfg;
  effective["seed"] = ctx.seed;
  Stage stage(ctx, "jitter", effective);
  stage.add_input(manifest_path);
  for (const ImageEntry& e : images) {
    stage.add_input(e.cube);
    stage.add_input(e.mask);
    stage.add_input(e.enhancement);
  }
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "jitter: up to date, nothing to do");
    return 0;
  }

  auto tiles = read_tile_manifest(manifest_path.string());
  std::map<std::string, std::vector<Tile>> by_image;
  for (const Tile& t : tiles) by_image[t.image_id].push_back(t);

  std::vector<std::vector<Tile>> jittered(images.size());
  parallel_for(images.size(), ctx.workers, [&](std::size_t i) {
    const ImageEntry& e = images[i];
    auto it = by_image.find(e.id);
    if (it == by_image.end()) return;
    std::vector<Tile> eligible;
    for (const Tile& t : it->second)
      if (splits.count(t.split)) eligible.push_back(t);
    if (eligible.empty()) return;
    auto cube = read_hsc(e.cube);
    auto mask = read_hsc(e.mask);
    auto enh = read_hsc(e.enhancement);
    auto out = jitter_tiles(eligible, cube, mask, enh, tp, jp,
                            substream_seed(ctx.seed, e.id));
    // only the fresh jittered crops need new shard payloads
    jittered[i].assign(out.begin() + eligible.size(), out.end());
  });

  fs::path shards_dir = ctx.out / "tiles" / "shards";
  std::map<std::string, std::ofstream> cube_shards, mask_shards;
  for (const char* s : {"train", "val", "test"}) {
    cube_shards[s].open(shards_dir / ("aug_" + std::string(s) + ".hsc"),
                        std::ios::binary | std::ios::trunc);
    mask_shards[s].open(shards_dir / ("aug_" + std::string(s) + "_mask.hsc"),
                        std::ios::binary | std::ios::trunc);
  }
  std::vector<Tile> all = tiles;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (jittered[i].empty()) continue;
    auto cube = read_hsc(images[i].cube);
    auto mask = read_hsc(images[i].mask);
    for (Tile& t : jittered[i]) {
      auto ccrop = crop(cube, t.row(), t.col(), t.size);
      auto mcrop = crop(mask, t.row(), t.col(), t.size);
      t.cube_path = "shards/aug_" + t.split + ".hsc";
      t.mask_path = "shards/aug_" + t.split + "_mask.hsc";
      t.cube_offset = append_hsc(cube_shards[t.split], ccrop);
      t.mask_offset = append_hsc(mask_shards[t.split], mcrop);
      all.push_back(t);
    }
  }
  write_tile_manifest((ctx.out / "tiles" / "manifest_aug.jsonl").string(), all);

  stage.outputs.push_back(ctx.out / "tiles" / "manifest_aug.jsonl");
  for (const char* s : {"train", "val", "test"}) {
    stage.outputs.push_back(shards_dir / ("aug_" + std::string(s) + ".hsc"));
    stage.outputs.push_back(shards_dir /
                            ("aug_" + std::string(s) + "_mask.hsc"));
  }
  stage.commit();
  log_msg(LogLevel::Info, "jitter: manifest grew from " +
                              std::to_string(tiles.size()) + " to " +
                              std::to_string(all.size()) + " tiles");
  return 0;
}

int cmd_mf(Ctx& ctx, const std::string& in, const std::string& sig_path,
           const std::string& out_file) {
  json cfg = ctx.section("matched_filter");
  const double lambda = cfg.value("lambda_rel", 1e-4);
  const double mf_threshold = cfg.value("threshold_ppm_m", 500.0);
  const Grouping grouping =
      cfg.value("grouping", std::string("per-column")) == std::string("global")
          ? Grouping::Global
          : Grouping::PerColumn;
  const MfMode mode =
      cfg.value("mode", std::string("mean-scaled")) == std::string("raw")
          ? MfMode::Raw
          : MfMode::MeanScaled;

  std::string signature_file =
      !sig_path.empty() ? sig_path : cfg.value("signature", std::string());
  if (signature_file.empty() && fs::exists(ctx.out / "signature.txt"))
    signature_file = (ctx.out / "signature.txt").string();
  require_file(signature_file, "target signature");

  auto run_one = [&](const std::string& cube_path, const fs::path& enh_path,
                     const fs::path& mask_path) {
    auto cube = read_hsc(cube_path);
    auto sig =
        resample_signature(load_signature(signature_file), cube.wavelengths_nm);
    auto stats = estimate_background(cube, grouping, lambda);
    auto enh = alpha_to_enhancement(matched_filter(cube, stats, sig, mode));
    write_hsc(enh_path.string(), enh, {{"units", "ppm_m"}});
    write_hsc(mask_path.string(), threshold_alpha(enh, mf_threshold));
  };

  if (!in.empty()) {
    require_file(in, "input cube");
    if (out_file.empty())
      throw Error(Errc::ConfigError, "file mode needs --out-file");
    fs::path enh_out(out_file);
    fs::path mask_out = enh_out;
    mask_out.replace_extension(".mask.hsc");
    run_one(in, enh_out, mask_out);
    write_file_provenance("mf", {in, signature_file}, enh_out);
    return 0;
  }

  auto images = load_images(ctx);
  Stage stage(ctx, "mf", cfg);
  stage.add_input(signature_file);
  for (const ImageEntry& e : images) {
    require_file(e.cube, "cube for image " + e.id);
    stage.add_input(e.cube);
  }
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "mf: up to date, nothing to do");
    return 0;
  }
  std::vector<std::array<fs::path, 2>> outs(images.size());
  parallel_for(images.size(), ctx.workers, [&](std::size_t i) {
    ImageEntry& e = images[i];
    fs::path dir = ctx.out / "images" / e.id;
    fs::create_directories(dir);
    run_one(e.cube, dir / "mf_enh.hsc", dir / "mf_mask.hsc");
    e.pred_mask = (dir / "mf_mask.hsc").string();
    outs[i] = {dir / "mf_enh.hsc", dir / "mf_mask.hsc"};
  });
  save_images(ctx, images);
  for (auto& pair : outs) {
    stage.outputs.push_back(pair[0]);
    stage.outputs.push_back(pair[1]);
  }
  stage.commit();
  log_msg(LogLevel::Info,
          "mf: filtered " + std::to_string(images.size()) + " image(s)");
  return 0;
}

int cmd_eval(Ctx& ctx, const std::string& split_flag,
             const std::string& pred_dir, const std::string& pred_file,
             const std::string& gt_file, const std::string& model_name) {
  json cfg = ctx.section("eval");
  const Aggregation agg =
      cfg.value("aggregation", std::string("micro")) == std::string("macro")
          ? Aggregation::Macro
          : Aggregation::Micro;
  const double thr = ctx.strong_threshold;

  json effective = cfg;
  effective["threshold_ppm_m"] = thr;
  effective["model_name"] = model_name;
  effective["split_flag"] = split_flag;
  effective["pred_dir"] = pred_dir;
  effective["pair_mode"] = !pred_file.empty() || !gt_file.empty();
  Stage stage(ctx, "eval", effective);

  std::vector<HyperCube> preds, gts;
  std::vector<std::uint8_t> strong;

  if (!pred_file.empty() || !gt_file.empty()) {
    // raster pair mode
    require_file(pred_file, "prediction raster");
    require_file(gt_file, "ground-truth raster");
    stage.add_input(pred_file);
    stage.add_input(gt_file);
    if (stage.up_to_date()) {
      log_msg(LogLevel::Info, "eval: up to date, nothing to do");
      return 0;
    }
    preds.push_back(read_hsc(pred_file));
    gts.push_back(read_hsc(gt_file));
    strong.push_back(0);
  } else {
    fs::path manifest_path = ctx.out / "tiles" / "manifest.jsonl";
    require_file(manifest_path.string(), "tile manifest (run tile first)");
    auto tiles = read_tile_manifest(manifest_path.string());
    const std::string want_split =
        split_flag.empty() ? cfg.value("split", std::string("test"))
                           : split_flag;

    fs::path base = manifest_path.parent_path();
    stage.add_input(manifest_path);
    std::set<std::string> shard_paths;
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      if (want_split != "all" && tiles[i].split != want_split) continue;
      selected.push_back(i);
      shard_paths.insert((base / tiles[i].mask_path).string());
    }
    if (selected.empty())
      throw Error(Errc::ConfigError,
                  "no tiles in split '" + want_split + "' to evaluate");
    for (const std::string& p : shard_paths) stage.add_input(p);

    std::map<std::string, std::string> image_pred_paths;
    if (pred_dir.empty()) {
      for (const ImageEntry& e : load_images(ctx)) {
        if (e.pred_mask.empty()) continue;
        require_file(e.pred_mask, "prediction raster for image " + e.id);
        stage.add_input(e.pred_mask);
        image_pred_paths[e.id] = e.pred_mask;
      }
    } else {
      for (std::size_t i : selected) {
        char name[32];
        std::snprintf(name, sizeof name, "tile_%06zu.hsc", i);
        fs::path p = fs::path(pred_dir) / name;
        require_file(p.string(), "prediction tile");
        stage.add_input(p);
      }
    }
    if (stage.up_to_date()) {
      log_msg(LogLevel::Info, "eval: up to date, nothing to do");
      return 0;
    }

    std::map<std::string, HyperCube> image_preds;
    for (const auto& [id, path] : image_pred_paths)
      image_preds.emplace(id, read_hsc(path));

    for (std::size_t i : selected) {
      const Tile& t = tiles[i];
      gts.push_back(read_hsc_at((base / t.mask_path).string(), t.mask_offset));
      strong.push_back(t.strong ? 1 : 0);
      if (!pred_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof name, "tile_%06zu.hsc", i);
        preds.push_back(read_hsc((fs::path(pred_dir) / name).string()));
      } else {
        auto it = image_preds.find(t.image_id);
        if (it == image_preds.end())
          throw Error(Errc::ConfigError,
                      "no prediction raster for image " + t.image_id +
                          " (run mf or pass --pred-dir)");
        preds.push_back(crop(it->second, t.row(), t.col(), t.size));
      }
    }
  }

  std::vector<MaskPair> pairs;
  for (std::size_t i = 0; i < preds.size(); ++i)
    pairs.push_back({&preds[i], &gts[i], strong[i] != 0});

  std::vector<const HyperCube*> pred_ptrs, gt_ptrs;
  for (auto& p : preds) pred_ptrs.push_back(&p);
  for (auto& g : gts) gt_ptrs.push_back(&g);
  auto pred_labels = labels_from_masks(pred_ptrs);
  auto gt_labels = labels_from_masks(gt_ptrs);

  json report;
  report["model"] = model_name;
  report["strong_threshold_ppm_m"] = thr;
  report["aggregation"] = agg == Aggregation::Micro ? "micro" : "macro";
  report["tiles"] = preds.size();

  fs::path eval_dir = ctx.out / "eval";
  fs::create_directories(eval_dir);
  std::ofstream csv(eval_dir / "report.csv", std::ios::trunc);
  csv << "Task,Model,Threshold,Precision,Recall,F1,Accuracy,IoU\n";

  for (Stratum s : {Stratum::All, Stratum::Strong, Stratum::Weak}) {
    auto seg = pixel_metrics(pairs, s, agg, thr);
    auto cls = tile_metrics(pred_labels, gt_labels, strong, s, thr);
    report["segmentation"][stratum_name(s)] = metrics_to_json(seg);
    report["classification"][stratum_name(s)] = metrics_to_json(cls);
    csv << "Img C," << model_name << "," << csv_threshold(s, thr) << ","
        << format_percent(cls.precision) << "," << format_percent(cls.recall)
        << "," << format_percent(cls.f1) << "," << format_percent(cls.accuracy)
        << ",-\n";
    csv << "Sem S," << model_name << "," << csv_threshold(s, thr) << ","
        << format_percent(seg.precision) << "," << format_percent(seg.recall)
        << "," << format_percent(seg.f1) << ",-," << format_percent(seg.iou)
        << "\n";
  }
  {
    std::ofstream jf(eval_dir / "report.json", std::ios::trunc);
    jf << report.dump(2) << "\n";
  }
  csv.close();
  stage.outputs.push_back(eval_dir / "report.json");
  stage.outputs.push_back(eval_dir / "report.csv");
  stage.commit();
  log_msg(LogLevel::Info, "eval: scored " + std::to_string(preds.size()) +
                              " tile(s); reports in " + eval_dir.string());
  return 0;
}

int cmd_report(Ctx& ctx, const std::string& in, const std::string& baseline) {
  require_file(in, "metrics rows file");
  json effective;
  effective["baseline"] = baseline;
  Stage stage(ctx, "report", effective);
  stage.add_input(in);
  if (stage.up_to_date()) {
    log_msg(LogLevel::Info, "report: up to date, nothing to do");
    return 0;
  }
  std::ifstream f(in);
  json doc = json::parse(f, nullptr, false);
  if (doc.is_discarded())
    throw Error(Errc::FormatError, in + " is not valid JSON");
  json rows = doc.is_array() ? doc : doc.value("rows", json::array());

  auto thr_kind = [](const json& r) -> std::string {
    if (!r.contains("threshold") || r["threshold"].is_null()) return "weak";
    if (r["threshold"].is_string()) {
      std::string s = r["threshold"].get<std::string>();
      return (s == "N/A" || s.empty()) ? "weak" : "strong";
    }
    return "strong";
  };

  // rows indexed by (dataset, task, model, stratum)
  std::map<std::string, json> by_key;
  auto key = [](const std::string& ds, const std::string& task,
                const std::string& model, const std::string& stratum) {
    return ds + "|" + task + "|" + model + "|" + stratum;
  };
  std::set<std::string> datasets, models;
  for (const auto& r : rows) {
    std::string ds = r.value("dataset", "default");
    std::string task = r.at("task").get<std::string>();
    std::string model = r.at("model").get<std::string>();
    datasets.insert(ds);
    models.insert(model);
    by_key[key(ds, task, model, thr_kind(r))] = r;
  }

  const char* metrics[] = {"precision", "recall", "f1", "accuracy", "iou"};
  json out_rows = json::array();

  // model-vs-baseline relative IoU, per dataset and stratum
  for (const auto& ds : datasets)
    for (const auto& stratum : {std::string("weak"), std::string("strong")}) {
      auto base = by_key.find(key(ds, "Sem S", baseline, stratum));
      if (base == by_key.end() || !base->second.contains("iou")) continue;
      for (const auto& model : models) {
        if (model == baseline) continue;
        auto it = by_key.find(key(ds, "Sem S", model, stratum));
        if (it == by_key.end() || !it->second.contains("iou")) continue;
        double a = it->second["iou"].get<double>();
        double b = base->second["iou"].get<double>();
        json r;
        r["kind"] = "relative";
        r["metric"] = "iou";
        r["task"] = "Sem S";
        r["dataset"] = ds;
        r["stratum"] = stratum;
        r["from"] = baseline;
        r["to"] = model;
        r["value"] = improvement(a, b, ImprovementKind::Relative);
        out_rows.push_back(std::move(r));
      }
    }

  // strong-vs-weak points, per dataset, model, task and metric
  for (const auto& ds : datasets)
    for (const auto& model : models)
      for (const auto& task : {std::string("Img C"), std::string("Sem S")}) {
        auto weak = by_key.find(key(ds, task, model, "weak"));
        auto strong = by_key.find(key(ds, task, model, "strong"));
        if (weak == by_key.end() || strong == by_key.end()) continue;
        for (const char* m : metrics) {
          if (!weak->second.contains(m) || weak->second[m].is_null() ||
              !strong->second.contains(m) || strong->second[m].is_null())
            continue;
          json r;
          r["kind"] = "points";
          r["metric"] = m;
          r["task"] = task;
          r["dataset"] = ds;
          r["model"] = model;
          r["value"] = improvement(strong->second[m].get<double>(),
                                   weak->second[m].get<double>(),
                                   ImprovementKind::Points);
          out_rows.push_back(std::move(r));
        }
      }

  fs::path dir = ctx.out / "report";
  fs::create_directories(dir);
  {
    std::ofstream jf(dir / "improvements.json", std::ios::trunc);
    jf << out_rows.dump(2) << "\n";
  }
  std::ofstream csv(dir / "improvements.csv", std::ios::trunc);
  csv << "Kind,Metric,Task,Dataset,Model,Stratum,From,To,Value\n";
  for (const auto& r : out_rows)
    csv << r.value("kind", "") << "," << r.value("metric", "") << ","
        << r.value("task", "") << "," << r.value("dataset", "") << ","
        << r.value("model", "") << "," << r.value("stratum", "") << ","
        << r.value("from", "") << "," << r.value("to", "") << ","
        << format_percent(r.value("value", 0.0)) << "\n";
  csv.close();
  stage.outputs.push_back(dir / "improvements.json");
  stage.outputs.push_back(dir / "improvements.csv");
  stage.commit();
  log_msg(LogLevel::Info, "report: " + std::to_string(out_rows.size()) +
                              " improvement row(s) in " + dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plumepipe: hyperspectral methane-plume detection pipeline"};
  app.require_subcommand(1);

  Ctx ctx;
  std::string config_path;
  app.add_option("--config", config_path, "pipeline config (JSON)");
  app.add_option("--out", ctx.out, "output root directory");
  auto* seed_opt = app.add_option("--seed", ctx.seed, "master seed");
  app.add_option("--workers", ctx.workers, "worker threads (0 = logical CPUs)");
  auto* thr_opt = app.add_option("--threshold-ppm-m", ctx.strong_threshold,
                                 "strong-plume threshold (default 900)");
  app.add_flag("--force", ctx.force, "rerun even if outputs are up to date");

  std::string scene_file, in_file, out_file, glt_file, combine = "union";
  std::string stats_path, scope_flag, split_flag, pred_dir, pred_file, gt_file;
  std::string model_name = "mag1c-baseline", report_in, baseline = "mag1c";
  std::string sig_path;

  auto* c_synth = app.add_subcommand("synth", "generate synthetic scenes");
  c_synth->add_option("--scene", scene_file,
                      "scene spec JSON (else config.synth)");

  auto* c_ortho = app.add_subcommand("ortho", "forward orthorectification");
  c_ortho->add_option("--in", in_file, "input raster (HSC)");
  c_ortho->add_option("--glt", glt_file, "GLT file");
  c_ortho->add_option("--out-file", out_file, "output raster (HSC)");

  auto* c_unortho = app.add_subcommand(
      "unortho", "sample ortho rasters back into the source plane");
  c_unortho->add_option("--in", in_file, "input raster (file mode)");
  c_unortho->add_option("--glt", glt_file, "GLT file (file mode)");
  c_unortho->add_option("--out-file", out_file, "output raster (file mode)");
  c_unortho->add_option("--combine", combine, "first|union|max (file mode)");

  auto* c_bands = app.add_subcommand("bands", "methane band subset selection");
  c_bands->add_option("--in", in_file, "input cube (file mode)");
  c_bands->add_option("--out-file", out_file, "output cube (file mode)");

  app.add_subcommand("split", "seeded image-level split");

  auto* c_stats = app.add_subcommand("stats", "per-band mean/std over cubes");
  c_stats->add_option("--scope", scope_flag, "train|val|test|all");

  auto* c_norm = app.add_subcommand("normalize", "per-band normalization");
  c_norm->add_option("--in", in_file, "input cube (file mode)");
  c_norm->add_option("--stats", stats_path, "stats JSON path");
  c_norm->add_option("--out-file", out_file, "output cube (file mode)");

  app.add_subcommand("tile", "cut tiles into shards with the validity rule");
  app.add_subcommand("jitter", "spatial-jitter augmentation");

  auto* c_mf = app.add_subcommand("mf", "matched-filter enhancement baseline");
  c_mf->add_option("--in", in_file, "input cube (file mode)");
  c_mf->add_option("--signature", sig_path, "two-column signature file");
  c_mf->add_option("--out-file", out_file, "output enhancement (file mode)");

  auto* c_eval = app.add_subcommand("eval", "score predictions against tiles");
  c_eval->add_option("--split", split_flag, "train|val|test|all (default test)");
  c_eval->add_option("--pred-dir", pred_dir,
                     "directory of per-tile prediction masks tile_NNNNNN.hsc");
  c_eval->add_option("--pred", pred_file, "single prediction raster (pair mode)");
  c_eval->add_option("--gt", gt_file, "single ground-truth raster (pair mode)");
  c_eval->add_option("--model-name", model_name, "name recorded in reports");

  auto* c_report = app.add_subcommand("report", "improvement arithmetic table");
  c_report->add_option("--in", report_in, "metrics rows JSON")->required();
  c_report->add_option("--baseline", baseline, "baseline model name");

  CLI11_PARSE(app, argc, argv);
  ctx.seed_overridden = seed_opt->count() > 0;
  ctx.threshold_overridden = thr_opt->count() > 0;

  try {
    if (!config_path.empty()) load_config(ctx, config_path);
    fs::create_directories(ctx.out);

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") return cmd_synth(ctx, scene_file);
    if (cmd == "ortho")
      return cmd_ortho_unortho(ctx, true, in_file, glt_file, out_file, combine);
    if (cmd == "unortho")
      return cmd_ortho_unortho(ctx, false, in_file, glt_file, out_file, combine);
    if (cmd == "bands") return cmd_bands(ctx, in_file, out_file);
    if (cmd == "split") return cmd_split(ctx);
    if (cmd == "stats") return cmd_stats(ctx, scope_flag);
    if (cmd == "normalize")
      return cmd_normalize(ctx, in_file, stats_path, out_file);
    if (cmd == "tile") return cmd_tile(ctx);
    if (cmd == "jitter") return cmd_jitter(ctx);
    if (cmd == "mf") return cmd_mf(ctx, in_file, sig_path, out_file);
    if (cmd == "eval")
      return cmd_eval(ctx, split_flag, pred_dir, pred_file, gt_file, model_name);
    if (cmd == "report") return cmd_report(ctx, report_in, baseline);
  } catch (const Error& e) {
    json err;
    err["error"] = errc_name(e.code());
    err["message"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return e.code() == Errc::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    json err;
    err["error"] = "Unexpected";
    err["message"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
  return 0;
}
