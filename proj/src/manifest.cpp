#include "fleetcast/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace fleetcast {

namespace {

using Json = nlohmann::ordered_json;

Json toml_to_json(const TomlValue& value) {
    return std::visit([](const auto& v) { return Json(v); }, value.v);
}

TomlValue json_to_toml(const Json& j, const std::string& key) {
    if (j.is_string()) return TomlValue{j.get<std::string>()};
    if (j.is_boolean()) return TomlValue{j.get<bool>()};
    if (j.is_number_integer()) return TomlValue{j.get<std::int64_t>()};
    if (j.is_number_float()) return TomlValue{j.get<double>()};
    if (j.is_array()) {
        if (!j.empty() && j.front().is_string()) {
            return TomlValue{j.get<std::vector<std::string>>()};
        }
        return TomlValue{j.get<std::vector<double>>()};
    }
    throw std::runtime_error("manifest: unsupported config value for key '" +
                             key + "'");
}

Json files_to_json(const std::vector<ManifestFile>& files) {
    Json arr = Json::array();
    for (const ManifestFile& f : files) {
        Json o;
        o["role"] = f.role;
        o["path"] = f.path;
        o["sha256"] = f.sha256;
        arr.push_back(std::move(o));
    }
    return arr;
}

std::vector<ManifestFile> files_from_json(const Json& arr) {
    std::vector<ManifestFile> out;
    for (const Json& o : arr) {
        out.push_back(ManifestFile{o.at("role").get<std::string>(),
                                   o.at("path").get<std::string>(),
                                   o.at("sha256").get<std::string>()});
    }
    return out;
}

}  // namespace

std::string tool_version() { return "fleetcast 0.1.0"; }

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file for digest: " + path);
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 init failed");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize n = in.gcount();
        if (n > 0 &&
            EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(n)) != 1) {
            EVP_MD_CTX_free(ctx);
            throw std::runtime_error("sha256 update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 final failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

void fill_backtest_summary(RunManifest* manifest, const DatasetBundle& data,
                           const BacktestResult& result) {
    manifest->region = result.region;
    auto& c = manifest->counters;
    const CoverageReport& cov = data.coverage;
    c["obs_rows"] = static_cast<std::int64_t>(cov.obs_rows);
    c["site_forecast_rows"] =
        static_cast<std::int64_t>(cov.site_forecast_rows);
    c["system_forecast_rows"] =
        static_cast<std::int64_t>(cov.system_forecast_rows);
    c["present_obs_cells"] = static_cast<std::int64_t>(cov.present_obs_cells);
    c["missing_obs_cells"] = static_cast<std::int64_t>(cov.missing_obs_cells);
    c["present_curve_cells"] =
        static_cast<std::int64_t>(cov.present_curve_cells);
    c["missing_curve_cells"] =
        static_cast<std::int64_t>(cov.missing_curve_cells);
    c["repaired_curves"] = static_cast<std::int64_t>(cov.repaired_curves);
    c["knot_adjustments"] = static_cast<std::int64_t>(cov.knot_adjustments);
    c["correlation_refits"] =
        static_cast<std::int64_t>(result.correlation_refits.size());
    c["skipped_days"] = static_cast<std::int64_t>(result.skipped_days);
    c["skipped_hours"] = static_cast<std::int64_t>(result.skipped_hours);
    c["method_failures"] = static_cast<std::int64_t>(result.method_failures);
    c["records_appended"] =
        static_cast<std::int64_t>(result.records_appended);
    manifest->notes.push_back("first_test_day=" +
                              format_date(result.first_test_day));
    manifest->notes.push_back("last_test_day=" +
                              format_date(result.last_test_day));
    for (Timestamp t : result.correlation_refits) {
        manifest->notes.push_back("correlation_refit=" + format_date(t));
    }
    manifest->gamma_choices = result.gamma_choices;
}

void digest_outputs(RunManifest* manifest, const std::string& dir,
                    const std::vector<std::string>& names) {
    for (const std::string& name : names) {
        const std::string path = dir.empty() ? name : dir + "/" + name;
        // Output entries carry the bare name so the manifest itself is
        // byte-identical regardless of where the run wrote its files.
        manifest->outputs.push_back(ManifestFile{name, name,
                                                 sha256_file(path)});
    }
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
    Json j;
    j["tool"] = manifest.version;
    j["command"] = manifest.command;
    Json cfg;
    for (const auto& [key, value] : manifest.config) {
        cfg[key] = toml_to_json(value);
    }
    j["config"] = std::move(cfg);
    j["inputs"] = files_to_json(manifest.inputs);
    if (!manifest.region.empty()) j["region"] = manifest.region;
    if (!manifest.counters.empty()) {
        Json c;
        for (const auto& [key, value] : manifest.counters) c[key] = value;
        j["counters"] = std::move(c);
    }
    if (!manifest.notes.empty()) j["notes"] = manifest.notes;
    if (!manifest.gamma_choices.empty()) {
        Json arr = Json::array();
        for (const GammaChoice& g : manifest.gamma_choices) {
            Json o;
            o["day"] = format_date(g.day);
            o["method"] = method_name(g.method);
            o["alpha"] = g.alpha;
            o["gamma"] = g.gamma;
            arr.push_back(std::move(o));
        }
        j["gamma_selections"] = std::move(arr);
    }
    j["outputs"] = files_to_json(manifest.outputs);

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write manifest: " + path);
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("manifest write failed: " + path);
    }
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + path);
    }
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("manifest parse failed (" + path +
                                 "): " + e.what());
    }
    RunManifest m;
    m.version = j.at("tool").get<std::string>();
    m.command = j.at("command").get<std::string>();
    for (const auto& [key, value] : j.at("config").items()) {
        m.config.emplace(key, json_to_toml(value, key));
    }
    m.inputs = files_from_json(j.at("inputs"));
    if (j.contains("region")) m.region = j["region"].get<std::string>();
    if (j.contains("counters")) {
        for (const auto& [key, value] : j["counters"].items()) {
            m.counters[key] = value.get<std::int64_t>();
        }
    }
    if (j.contains("notes")) {
        m.notes = j["notes"].get<std::vector<std::string>>();
    }
    if (j.contains("gamma_selections")) {
        for (const Json& o : j["gamma_selections"]) {
            GammaChoice g;
            g.day = parse_timestamp(o.at("day").get<std::string>() +
                                    "T00:00:00Z");
            g.method = parse_method(o.at("method").get<std::string>());
            g.alpha = o.at("alpha").get<double>();
            g.gamma = o.at("gamma").get<double>();
            m.gamma_choices.push_back(g);
        }
    }
    if (j.contains("outputs")) m.outputs = files_from_json(j["outputs"]);
    return m;
}

ProtocolConfig manifest_config(const RunManifest& manifest) {
    if (manifest.command != "backtest") {
        throw std::runtime_error(
            "manifest records a '" + manifest.command +
            "' run; only backtest manifests can be replayed");
    }
    return config_from_toml(manifest.config);
}

std::vector<std::string> verify_input_digests(const RunManifest& manifest,
                                              const BundlePaths& paths) {
    auto path_for = [&](const std::string& role) -> std::string {
        if (role == "observations") return paths.observations;
        if (role == "site_forecasts") return paths.site_forecasts;
        if (role == "system_forecasts") return paths.system_forecasts;
        if (role == "sites") return paths.sites;
        return "";
    };
    std::vector<std::string> problems;
    for (const ManifestFile& f : manifest.inputs) {
        const std::string path =
            path_for(f.role).empty() ? f.path : path_for(f.role);
        std::string digest;
        try {
            digest = sha256_file(path);
        } catch (const std::exception& e) {
            problems.push_back(f.role + ": " + e.what());
            continue;
        }
        if (digest != f.sha256) {
            problems.push_back(f.role + ": digest mismatch for " + path +
                               " (manifest " + f.sha256 + ", file " + digest +
                               ")");
        }
    }
    return problems;
}

}  // namespace fleetcast
