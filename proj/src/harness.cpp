#include "nvsplit/harness.hpp"

#include "nvsplit/csv.hpp"
#include "nvsplit/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nvsplit {

using json = nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Configuration:
    case ErrorKind::Argument:
    case ErrorKind::Capability: return static_cast<int>(ExitStatus::Config);
    case ErrorKind::Overflow: return static_cast<int>(ExitStatus::Overflow);
    case ErrorKind::Inconclusive: return static_cast<int>(ExitStatus::Inconclusive);
    }
    return static_cast<int>(ExitStatus::Config);
}

std::optional<Command> parse_command(std::string_view name)
{
    if (name == "convergence") return Command::Convergence;
    if (name == "supermartingale") return Command::Supermartingale;
    if (name == "hjm-demo") return Command::HjmDemo;
    if (name == "list-models") return Command::ListModels;
    if (name == "selftest") return Command::Selftest;
    return std::nullopt;
}

namespace {

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write " + path.string());
    return out;
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << v;
    return s.str();
}

std::string levels_field(const std::vector<int>& levels)
{
    std::string out;
    for (int n : levels) out += (out.empty() ? "" : ";") + std::to_string(n);
    return out;
}

} // namespace

void write_errors_csv(std::ostream& out, const ErrorReport& report)
{
    CsvWriter csv(out);
    csv.field("scheme").field("nsteps").field("dt").field("grid_point").field("raw_error").field("weighted_error");
    csv.field("stderr").field("argmax_flag").end_row();
    for (const auto& level : report.levels)
        for (const auto& p : level.error.points) {
            csv.field(level.scheme).field(level.nsteps).field(level.dt).field(p.grid_index).field(p.raw_error);
            csv.field(p.weighted_error).field(p.std_error).field(p.grid_index == level.error.argmax).end_row();
        }
}

void write_summary_csv(std::ostream& out, const ErrorReport& report)
{
    CsvWriter csv(out);
    csv.field("scheme").field("slope").field("residual").field("levels_used").end_row();
    for (const auto& f : report.fits)
        csv.field(f.scheme).field(f.slope).field(f.residual).field(levels_field(f.levels_used)).end_row();
}

void write_supermartingale_csv(std::ostream& out, const SupermartingaleReport& report)
{
    CsvWriter csv(out);
    csv.field("grid_point").field("t").field("ratio").field("stderr").field("bound").field("violation").end_row();
    for (const auto& p : report.points)
        csv.field(p.grid_index).field(p.t).field(p.ratio).field(p.std_error).field(std::exp(report.omega * p.t))
            .field(p.violation).end_row();
}

ErrorReport run_convergence(const StudyConfig& config, const fs::path& out_dir)
{
    fs::create_directories(out_dir);
    ErrorReport report = convergence_study(config.experiment);
    auto errors = open_output(out_dir / "errors.csv");
    write_errors_csv(errors, report);
    auto summary = open_output(out_dir / "summary.csv");
    write_summary_csv(summary, report);
    return report;
}

SupermartingaleReport run_supermartingale(const StudyConfig& config, const fs::path& out_dir)
{
    fs::create_directories(out_dir);
    const auto& e = config.experiment;
    SupermartingaleReport report =
        supermartingale_check(e.model, e.flow, e.weight, e.T, e.grid, config.supermartingale);
    auto points = open_output(out_dir / "supermartingale.csv");
    write_supermartingale_csv(points, report);
    auto summary = open_output(out_dir / "supermartingale_summary.csv");
    CsvWriter csv(summary);
    csv.field("omega").field("violations").end_row();
    csv.field(report.omega).field(report.violations).end_row();
    return report;
}

ErrorReport run_hjm_demo(const StudyConfig& config, const fs::path& out_dir, bool debug_norms)
{
    if (!config.hjm) throw ConfigError("hjm-demo needs model 'hjm'");
    const auto& e = config.experiment;
    const HjmModel& hm = *config.hjm;
    fs::create_directories(out_dir / "curves");

    // One NV path of the first initial curve, recorded at the snapshot times.
    const int nsteps = e.steps.back();
    const double dt = e.T / nsteps;
    Stepper stepper(e.model, e.flow, SchemeSpec::nv(e.model.noise_dim()));
    RandomStream rng(e.seed, fnv1a32("hjm-demo/path"), 0, 0);
    Vector x = e.grid.front();

    auto index = open_output(out_dir / "snapshots.csv");
    CsvWriter csv(index);
    csv.field("index").field("t").field("file").field("h_alpha_norm");
    if (debug_norms) csv.field("h_alpha_norm_values");
    csv.end_row();

    std::vector<std::pair<int, double>> marks;
    for (double t : config.snapshots) marks.emplace_back(static_cast<int>(std::lround(t / dt)), t);
    int k = 0;
    for (std::size_t i = 0; i < marks.size(); ++i) {
        for (; k < marks[i].first; ++k) stepper.step(dt, x, rng);
        const ForwardCurve curve = hm.curve(x);
        const std::string file = "curves/curve_" + std::to_string(i) + ".csv";
        auto out = open_output(out_dir / file);
        write_curve_csv(out, curve);
        csv.field(static_cast<int>(i)).field(marks[i].second).field(file).field(h_alpha_norm(curve));
        if (debug_norms) csv.field(h_alpha_norm_values(curve));
        csv.end_row();
    }
    return run_convergence(config, out_dir);
}

// ---------------------------------------------------------------------------

namespace {

class Manifest {
public:
    Manifest(fs::path path, std::string_view command) : path_(std::move(path))
    {
        doc_["command"] = command;
        doc_["library_version"] = kLibraryVersion;
        doc_["status"] = "running";
        doc_["outputs"] = json::array();
        doc_["wall_clock_seconds"] = json::object();
    }

    json& operator[](const char* key) { return doc_[key]; }
    void output(const std::string& file) { doc_["outputs"].push_back(file); }

    void write() const
    {
        std::ofstream out(path_, std::ios::binary);
        if (out) out << doc_.dump(2) << '\n';
    }

private:
    fs::path path_;
    json doc_;
};

json error_record(const std::exception& ex, ErrorKind kind, int code)
{
    json rec;
    rec["status"] = "error";
    rec["kind"] = to_string(kind);
    rec["exit_code"] = code;
    rec["message"] = ex.what();
    if (const auto* v = dynamic_cast<const ConfigValidationError*>(&ex)) {
        json issues = json::array();
        for (const auto& i : v->issues()) issues.push_back({{"path", i.path}, {"message", i.message}});
        rec["issues"] = issues;
    }
    if (const auto* o = dynamic_cast<const OverflowError*>(&ex)) {
        rec["step"] = o->step();
        rec["path"] = o->path();
    }
    return rec;
}

const char* kAssumption =
    "polynomial payoffs are assumed to lie in the regularity classes required by the order results; "
    "membership is not verified";

} // namespace

int run(Command command, const RunOptions& options, std::ostream& out, std::ostream& err)
{
    if (command == Command::ListModels) {
        for (const auto& name : builtin_names()) out << name << '\n';
        out << "hjm\n";
        return 0;
    }
    if (command == Command::Selftest) {
        int failures = 0;
        for (const auto& r : run_selftest()) {
            out << (r.passed ? "PASS " : "FAIL ") << r.name;
            if (!r.detail.empty()) out << " (" << r.detail << ")";
            out << '\n';
            failures += r.passed ? 0 : 1;
        }
        return failures == 0 ? 0 : static_cast<int>(ExitStatus::SelftestFailure);
    }

    std::error_code ec;
    fs::create_directories(options.out, ec);
    if (ec) {
        err << json{{"status", "error"}, {"kind", "argument"}, {"exit_code", 2},
                    {"message", "cannot create output directory " + options.out.string()}}
                   .dump()
            << '\n';
        return static_cast<int>(ExitStatus::Config);
    }

    const char* name = command == Command::Convergence ? "convergence"
                       : command == Command::Supermartingale ? "supermartingale"
                                                               : "hjm-demo";
    Manifest manifest(options.out / "manifest.json", name);
    manifest["config_path"] = options.config.string();
    manifest["workers"] = options.workers;
    manifest.write();

    const auto start = std::chrono::steady_clock::now();
    try {
        if (options.config.empty()) throw ArgumentError("--config is required for " + std::string(name));
        StudyConfig config = load_config(options.config);
        if (options.seed) config.override_seed(*options.seed);
        config.set_workers(options.workers);
        manifest["config_hash"] = hex64(config.hash);
        manifest["seed"] = config.experiment.seed;
        manifest.write();

        switch (command) {
        case Command::Convergence:
        case Command::HjmDemo: {
            manifest["assumptions"] = json::array({kAssumption});
            manifest.output("errors.csv");
            manifest.output("summary.csv");
            if (command == Command::HjmDemo) {
                manifest.output("snapshots.csv");
                manifest.output("curves/");
            }
            manifest.write();
            const ErrorReport report = command == Command::Convergence
                                           ? run_convergence(config, options.out)
                                           : run_hjm_demo(config, options.out, options.debug_hjm_norm);
            manifest["wall_clock_seconds"][name] = report.wall_clock_seconds;
            json fits = json::array();
            for (const auto& f : report.fits) {
                json jf{{"scheme", f.scheme}, {"exact", f.exact}, {"conclusive", f.conclusive},
                        {"levels_used", f.levels_used}};
                jf["slope"] = std::isfinite(f.slope) ? json(f.slope) : json(nullptr);
                fits.push_back(jf);
                out << f.scheme << ": slope " << format_double(f.slope) << " over " << f.levels_used.size()
                    << " levels" << (f.exact ? " (exact at machine precision)" : "") << '\n';
            }
            manifest["fits"] = fits;
            report.require_conclusive();
            break;
        }
        case Command::Supermartingale: {
            manifest.output("supermartingale.csv");
            manifest.output("supermartingale_summary.csv");
            manifest.write();
            const SupermartingaleReport report = run_supermartingale(config, options.out);
            manifest["omega"] = report.omega;
            manifest["violations"] = report.violations;
            out << "omega " << format_double(report.omega) << ", violations " << report.violations << '\n';
            break;
        }
        default: break;
        }
        manifest["wall_clock_seconds"]["total"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest["status"] = "ok";
        manifest.write();
        return 0;
    } catch (const std::exception& ex) {
        ErrorKind kind = ErrorKind::Argument;
        if (const auto* e = dynamic_cast<const Error*>(&ex)) kind = e->kind();
        const int code = exit_code_for(kind);
        const json rec = error_record(ex, kind, code);
        manifest["status"] = "error";
        manifest["error"] = rec;
        manifest["wall_clock_seconds"]["total"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest.write();
        std::ofstream(options.out / "error.json", std::ios::binary) << rec.dump(2) << '\n';
        err << rec.dump() << '\n';
        return code;
    }
}

} // namespace nvsplit
