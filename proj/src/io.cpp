#include "normgam/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace normgam {

namespace fs = std::filesystem;

ParseError::ParseError(const fs::path& file, std::size_t line, const std::string& what)
    : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + what),
      line_(line) {}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

double parse_double(const std::string& token, const fs::path& file, std::size_t line) {
    double v = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(file, line, "malformed number '" + token + "'");
    return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

ArrayFile read_array_file(const fs::path& path) {
    auto in = open_input(path);
    ArrayFile file;
    std::vector<double> pvalues;
    bool negative_section = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        if (line == ">negative") {
            if (negative_section)
                throw ParseError(path, lineno, "duplicate >negative sentinel");
            negative_section = true;
            continue;
        }
        const auto fields = split_tabs(line);
        if (fields.size() < 2)
            throw ParseError(path, lineno, "expected at least 2 tab-separated columns");
        const double value = parse_double(fields[1], path, lineno);
        if (negative_section) {
            file.negative_ids.push_back(fields[0]);
            file.probes.negative.push_back(value);
        } else {
            file.regular_ids.push_back(fields[0]);
            file.probes.regular.push_back(value);
            if (fields.size() >= 3 && !fields[2].empty())
                pvalues.push_back(parse_double(fields[2], path, lineno));
        }
    }
    if (!pvalues.empty()) {
        if (pvalues.size() != file.probes.regular.size())
            throw ParseError(path, lineno, "detection p-values on only some regular rows");
        file.probes.detection_pvalues = std::move(pvalues);
    }
    if (file.probes.regular.empty())
        throw ParseError(path, lineno, "no regular probe rows");
    return file;
}

void write_array_file(const fs::path& path, const ArrayFile& file,
                      const std::vector<std::string>& header_comments) {
    auto out = open_output(path);
    for (const auto& c : header_comments) out << "# " << c << "\n";
    const bool with_p = file.probes.detection_pvalues.has_value();
    for (std::size_t i = 0; i < file.probes.regular.size(); ++i) {
        const std::string id = i < file.regular_ids.size()
                                   ? file.regular_ids[i]
                                   : "probe_" + std::to_string(i + 1);
        out << id << '\t' << format_double(file.probes.regular[i]);
        if (with_p) out << '\t' << format_double((*file.probes.detection_pvalues)[i]);
        out << '\n';
    }
    if (!file.probes.negative.empty()) {
        out << ">negative\n";
        for (std::size_t i = 0; i < file.probes.negative.size(); ++i) {
            const std::string id = i < file.negative_ids.size()
                                       ? file.negative_ids[i]
                                       : "neg_" + std::to_string(i + 1);
            out << id << '\t' << format_double(file.probes.negative[i]) << '\n';
        }
    }
}

DetectionTable read_detection_table(const fs::path& path, std::size_t n_neg) {
    auto in = open_input(path);
    DetectionTable table;
    table.n_neg = n_neg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() < 3)
            throw ParseError(path, lineno,
                             "expected probe_id, intensity, detection_pvalue columns");
        table.regular.push_back(parse_double(fields[1], path, lineno));
        table.pvalues.push_back(parse_double(fields[2], path, lineno));
    }
    if (table.regular.empty()) throw ParseError(path, lineno, "no data rows");
    return table;
}

void write_fit_record(const fs::path& path, const FitRecord& rec) {
    auto out = open_output(path);
    out << "# fitted background model parameters\n";
    out << "model=" << rec.model << '\n';
    out << "mu=" << format_double(rec.mu) << '\n';
    out << "sigma=" << format_double(rec.sigma) << '\n';
    if (rec.model == "normgam") {
        out << "k=" << format_double(rec.shape) << '\n';
        out << "theta=" << format_double(rec.scale) << '\n';
    } else {
        out << "alpha=" << format_double(rec.scale) << '\n';
    }
    out << "loglik=" << format_double(rec.loglik) << '\n';
    out << "iterations=" << rec.iterations << '\n';
    out << "converged=" << (rec.converged ? 1 : 0) << '\n';
}

namespace {

Manifest read_keyvalue(const fs::path& path) {
    auto in = open_input(path);
    Manifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path, lineno, "expected key=value");
        m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

}  // namespace

FitRecord read_fit_record(const fs::path& path) {
    const Manifest m = read_keyvalue(path);
    auto need = [&](const std::string& key) -> std::string {
        const auto it = m.find(key);
        if (it == m.end())
            throw std::runtime_error(path.string() + ": missing key '" + key + "'");
        return it->second;
    };
    FitRecord rec;
    rec.model = need("model");
    rec.mu = parse_double(need("mu"), path, 0);
    rec.sigma = parse_double(need("sigma"), path, 0);
    if (rec.model == "normgam") {
        rec.shape = parse_double(need("k"), path, 0);
        rec.scale = parse_double(need("theta"), path, 0);
    } else if (rec.model == "normexp-mle" || rec.model == "normexp-np" ||
               rec.model == "normexp-rma") {
        rec.scale = parse_double(need("alpha"), path, 0);
    } else {
        throw std::runtime_error(path.string() + ": unknown model '" + rec.model + "'");
    }
    if (m.count("loglik")) rec.loglik = parse_double(m.at("loglik"), path, 0);
    if (m.count("iterations")) rec.iterations = std::stoi(m.at("iterations"));
    if (m.count("converged")) rec.converged = m.at("converged") != "0";
    return rec;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
    auto out = open_output(path);
    out << "# batch manifest\n";
    for (const auto& [k, v] : manifest) out << k << '=' << v << '\n';
}

Manifest read_manifest(const fs::path& path) { return read_keyvalue(path); }

void write_column(const fs::path& path, std::span<const double> values,
                  const std::vector<std::string>& ids,
                  const std::vector<std::string>& header_comments) {
    auto out = open_output(path);
    for (const auto& c : header_comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!ids.empty())
            out << (i < ids.size() ? ids[i] : "probe_" + std::to_string(i + 1)) << '\t';
        out << format_double(values[i]) << '\n';
    }
}

std::vector<double> read_column(const fs::path& path) {
    auto in = open_input(path);
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_tabs(line);
        values.push_back(parse_double(fields.back(), path, lineno));
    }
    return values;
}

void write_xy(const fs::path& path, std::span<const double> x, std::span<const double> y,
              const std::string& comment) {
    if (x.size() != y.size()) throw std::invalid_argument("write_xy: length mismatch");
    auto out = open_output(path);
    if (!comment.empty()) out << "# " << comment << "\n";
    for (std::size_t i = 0; i < x.size(); ++i)
        out << format_double(x[i]) << '\t' << format_double(y[i]) << '\n';
}

namespace {

std::vector<std::string> make_probe_ids(std::size_t n, const char* prefix) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = prefix + std::to_string(i + 1);
    return ids;
}

}  // namespace

void write_batch(const fs::path& dir, const SimulatedBatch& batch) {
    fs::create_directories(dir);
    const auto n = batch.arrays.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::string tag = std::to_string(i + 1);
        write_column(dir / ("array_" + tag + ".tsv"), batch.arrays[i].regular,
                     make_probe_ids(batch.arrays[i].regular.size(), "probe_"));
        write_column(dir / ("negative_" + tag + ".tsv"), batch.arrays[i].negative,
                     make_probe_ids(batch.arrays[i].negative.size(), "neg_"));
        if (!batch.shared_signal)
            write_column(dir / ("signal_" + tag + ".tsv"), batch.signals[i],
                         make_probe_ids(batch.signals[i].size(), "probe_"));
    }
    if (batch.shared_signal)
        write_column(dir / "signal.tsv", batch.signals.front(),
                     make_probe_ids(batch.signals.front().size(), "probe_"));

    const NormalGammaParams p = batch.spec.params();
    Manifest m;
    m["scenario"] = to_string(batch.spec.scenario);
    m["set"] = std::to_string(batch.spec.set_id);
    m["mu"] = format_double(p.mu);
    m["sigma"] = format_double(p.sigma);
    m["k"] = format_double(p.shape);
    m["theta"] = format_double(p.scale);
    m["n_reg"] = std::to_string(batch.spec.n_reg);
    m["n_neg"] = std::to_string(batch.spec.n_neg);
    m["n_arrays"] = std::to_string(batch.spec.n_arrays);
    m["mixture_p"] = format_double(batch.spec.mixture_p);
    m["seed"] = std::to_string(batch.spec.seed);
    m["shared_signal"] = batch.shared_signal ? "1" : "0";
    // Written last: a complete manifest marks a complete batch.
    write_manifest(dir / "manifest.txt", m);
}

BatchOnDisk read_batch(const fs::path& dir) {
    BatchOnDisk batch;
    batch.manifest = read_manifest(dir / "manifest.txt");
    const auto n = static_cast<std::size_t>(std::stoul(batch.manifest.at("n_arrays")));
    batch.shared_signal = batch.manifest.count("shared_signal") &&
                          batch.manifest.at("shared_signal") == "1";
    batch.arrays.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string tag = std::to_string(i + 1);
        batch.arrays[i].regular = read_column(dir / ("array_" + tag + ".tsv"));
        batch.arrays[i].negative = read_column(dir / ("negative_" + tag + ".tsv"));
        if (!batch.shared_signal)
            batch.signals.push_back(read_column(dir / ("signal_" + tag + ".tsv")));
    }
    if (batch.shared_signal)
        batch.signals.push_back(read_column(dir / "signal.tsv"));
    return batch;
}

}  // namespace normgam
