// End-to-end checks against the installed CLI binary (path in argv[1]).
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "plumepipe/dataset.hpp"
#include "plumepipe/hsc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_failures = 0;

void expect(bool ok, const std::string& what) {
  std::printf("%s: %s\n", ok ? "ok" : "FAIL", what.c_str());
  if (!ok) ++g_failures;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) { return std::system((cmd + " 2>/dev/null").c_str()); }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <plumepipe-binary>\n");
    return 2;
  }
  const std::string cli = argv[1];
  fs::path base = fs::temp_directory_path() / "plumepipe_cli_test";
  fs::remove_all(base);
  fs::create_directories(base);

  // --- unortho through an identity GLT reproduces the input byte for byte
  {
    fs::path scene = base / "scene.json";
    std::ofstream(scene) << R"({"id":"ident","rows":24,"cols":24,"bands":3,
      "plumes":[{"row":12,"col":12,"sigma_px":3,"peak_ppm_m":1200}],"seed":5})";
    fs::path out = base / "ident";
    expect(run(cli + " --out " + out.string() + " synth --scene " +
               scene.string()) == 0,
           "synth runs");
    fs::path in_mask = out / "images" / "ident" / "ortho_mask.hsc";
    fs::path back = out / "back.hsc";
    expect(run(cli + " --out " + out.string() + " unortho --in " +
               in_mask.string() + " --glt " +
               (out / "images" / "ident" / "scene.glt").string() +
               " --out-file " + back.string() + " --combine union") == 0,
           "file-mode unortho runs");
    expect(slurp(in_mask) == slurp(back),
           "identity-GLT unortho output is byte-identical to its input");
  }

  // --- report reproduces the published improvement rows
  {
    fs::path rows = base / "rows.json";
    std::ofstream(rows) << R"([
      {"dataset":"orthorectified","task":"Sem S","model":"mag1c","threshold":"N/A","iou":4.76},
      {"dataset":"orthorectified","task":"Sem S","model":"mag1c","threshold":900,"iou":4.84},
      {"dataset":"orthorectified","task":"Sem S","model":"UNet","threshold":"N/A","recall":19.91,"iou":18.47},
      {"dataset":"orthorectified","task":"Sem S","model":"UNet","threshold":900,"recall":32.52,"iou":30.80},
      {"dataset":"orthorectified","task":"Img C","model":"UNet","threshold":"N/A","recall":56.21},
      {"dataset":"orthorectified","task":"Img C","model":"UNet","threshold":900,"recall":83.33},
      {"dataset":"unorthorectified","task":"Sem S","model":"UNet","threshold":"N/A","iou":16.91},
      {"dataset":"unorthorectified","task":"Sem S","model":"UNet","threshold":900,"iou":26.17},
      {"dataset":"unorthorectified","task":"Img C","model":"UNet","threshold":"N/A","recall":48.89},
      {"dataset":"unorthorectified","task":"Img C","model":"UNet","threshold":900,"recall":71.61}
    ])";
    fs::path out = base / "rep";
    expect(run(cli + " --out " + out.string() + " report --in " +
               rows.string()) == 0,
           "report runs");
    json imp = json::parse(slurp(out / "report" / "improvements.json"));
    auto find = [&](const std::string& kind, const std::string& metric,
                    const std::string& ds, const std::string& task,
                    const std::string& stratum_or_model) -> double {
      for (const auto& r : imp) {
        if (r.value("kind", "") != kind || r.value("metric", "") != metric ||
            r.value("dataset", "") != ds || r.value("task", "") != task)
          continue;
        if (kind == "relative" && r.value("stratum", "") != stratum_or_model)
          continue;
        if (kind == "points" && r.value("model", "") != stratum_or_model)
          continue;
        return r.value("value", -1.0);
      }
      return -1e9;
    };
    expect(std::abs(find("relative", "iou", "orthorectified", "Sem S", "weak") -
                    288.03) <= 0.02,
           "relative IoU improvement 288.03");
    expect(std::abs(find("relative", "iou", "orthorectified", "Sem S",
                         "strong") -
                    536.36) <= 0.02,
           "relative IoU improvement 536.36");
    expect(std::abs(find("points", "iou", "orthorectified", "Sem S", "UNet") -
                    12.33) <= 0.01,
           "IoU points improvement 12.33");
    expect(std::abs(find("points", "iou", "unorthorectified", "Sem S", "UNet") -
                    9.26) <= 0.01,
           "IoU points improvement 9.26");
    expect(std::abs(find("points", "recall", "orthorectified", "Img C",
                         "UNet") -
                    27.12) <= 0.01,
           "recall points improvement 27.12");
    expect(std::abs(find("points", "recall", "unorthorectified", "Img C",
                         "UNet") -
                    22.72) <= 0.01,
           "recall points improvement 22.72");
  }

  // --- config round-trips losslessly through parse/dump/parse
  {
    fs::path cfg = base / "cfg.json";
    std::ofstream(cfg) << R"({"seed":9,"threshold_ppm_m":900.0,
      "tiling":{"size":32,"stride":16,"min_valid_frac":0.8},
      "split":{"fractions":[0.8,0.15,0.05]}})";
    json a = json::parse(slurp(cfg));
    json b = json::parse(a.dump());
    expect(a == b, "config JSON round-trips losslessly");
  }

  // --- forward ortho in file mode reproduces synth's own ortho output
  {
    fs::path out = base / "ident";
    fs::path fwd = out / "fwd.hsc";
    expect(run(cli + " --out " + out.string() + " ortho --in " +
               (out / "images" / "ident" / "src_mask.hsc").string() +
               " --glt " + (out / "images" / "ident" / "scene.glt").string() +
               " --out-file " + fwd.string()) == 0,
           "file-mode ortho runs");
    expect(slurp(out / "images" / "ident" / "ortho_mask.hsc") == slurp(fwd),
           "file-mode ortho matches the synth-written ortho annotation");
  }

  // --- bands / stats / normalize file modes
  {
    fs::path out = base / "ident";
    fs::path cube = out / "images" / "ident" / "cube.hsc";
    fs::path cfg = base / "bandscfg.json";
    std::ofstream(cfg) << R"({"band_selection":{"ranges_nm":[[2004,2200]],
      "rgb_targets_nm":[]}})";
    fs::path sub = out / "sub.hsc";
    expect(run(cli + " --config " + cfg.string() + " --out " + out.string() +
               " bands --in " + cube.string() + " --out-file " +
               sub.string()) == 0,
           "file-mode bands runs");
    auto cut = plumepipe::read_hsc(sub.string());
    bool in_range = cut.bands > 0;
    for (double wl : cut.wavelengths_nm)
      in_range = in_range && wl >= 2004.0 && wl <= 2200.0;
    expect(in_range, "band subset stays inside the requested interval");

    fs::path stats = out / "stats_ident.json";
    fs::path norm = out / "norm.hsc";
    // stats over the single-image registry, then normalize in file mode
    expect(run(cli + " --out " + out.string() + " stats --scope all") == 0,
           "stats runs over the registry");
    expect(run(cli + " --out " + out.string() + " normalize --in " +
               cube.string() + " --stats " +
               (out / "stats.json").string() + " --out-file " +
               norm.string()) == 0,
           "file-mode normalize runs");
    auto normalized = plumepipe::read_hsc(norm.string());
    double sum = 0.0;
    std::size_t n = 0;
    for (float v : normalized.data)
      if (!std::isnan(v)) {
        sum += v;
        ++n;
      }
    expect(n > 0 && std::abs(sum / double(n)) < 0.05,
           "normalized cube is near zero mean");
  }

  // --- external per-tile predictions through --pred-dir score perfectly
  // when they are copies of the ground truth
  {
    fs::path out = base / "ext";
    fs::path cfg = base / "extcfg.json";
    std::ofstream(cfg) << R"({
      "seed": 3,
      "synth": {"scenes": [
        {"id":"e0","rows":64,"cols":64,"bands":4,
         "plumes":[{"row":20,"col":20,"sigma_px":5,"peak_ppm_m":1300}],
         "distortion":{"skew_per_line":0.25}},
        {"id":"e1","rows":64,"cols":64,"bands":4,
         "plumes":[{"row":40,"col":30,"sigma_px":4,"peak_ppm_m":600}]},
        {"id":"e2","rows":64,"cols":64,"bands":4,"plumes":[]}
      ]},
      "tiling": {"size": 32, "stride": 32},
      "split": {"fractions": [0.34, 0.33, 0.33]}
    })";
    bool ok = true;
    for (const char* cmd : {"synth", "unortho", "split", "tile"})
      ok = ok && run(cli + " --config " + cfg.string() + " --out " +
                     out.string() + " " + cmd) == 0;
    expect(ok, "external-predictions fixture pipeline runs");

    auto tiles =
        plumepipe::read_tile_manifest((out / "tiles" / "manifest.jsonl").string());
    expect(!tiles.empty(), "fixture produced tiles");
    fs::path pred_dir = base / "preds";
    fs::create_directories(pred_dir);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      auto gt = plumepipe::read_hsc_at(
          (out / "tiles" / tiles[i].mask_path).string(), tiles[i].mask_offset);
      char name[32];
      std::snprintf(name, sizeof name, "tile_%06zu.hsc", i);
      plumepipe::write_hsc((pred_dir / name).string(), gt);
    }
    expect(run(cli + " --config " + cfg.string() + " --out " + out.string() +
               " eval --split all --pred-dir " + pred_dir.string() +
               " --model-name external") == 0,
           "eval consumes external per-tile predictions");
    json rep = json::parse(slurp(out / "eval" / "report.json"));
    expect(rep["segmentation"]["all"]["iou"].get<double>() == 100.0,
           "perfect external predictions give IoU 100");
    expect(rep["classification"]["all"]["accuracy"].get<double>() == 100.0,
           "perfect external predictions give accuracy 100");
  }

  // --- no tile leakage: every manifested tile sits in exactly one split
  {
    fs::path out = base / "ext";
    auto tiles = plumepipe::read_tile_manifest(
        (out / "tiles" / "manifest.jsonl").string());
    auto split = plumepipe::read_split_manifest((out / "split.json").string());
    bool ok = !tiles.empty();
    for (const auto& t : tiles) ok = ok && split.split_of(t.image_id) == t.split;
    expect(ok, "every tile's split matches its image's split assignment");
  }

  // --- failures exit nonzero with a machine-readable error line
  {
    fs::path out = base / "err";
    std::string cmd = cli + " --out " + out.string() + " tile 2>" +
                      (base / "err.txt").string();
    int rc = std::system(cmd.c_str());
    expect(rc != 0, "tile without inputs fails");
    json err = json::parse(slurp(base / "err.txt"), nullptr, false);
    expect(!err.is_discarded() && err.contains("error"),
           "stderr carries a machine-readable error line");
  }

  fs::remove_all(base);
  if (g_failures == 0) std::printf("test_cli: all checks passed\n");
  return g_failures == 0 ? 0 : 1;
}
