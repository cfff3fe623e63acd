#include "epistate/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace epistate::io {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) fields.push_back(trim(field));
    if (!line.empty() && line.back() == sep) fields.push_back("");
    return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

double parse_double(const std::string& token, const std::string& locus) {
    try {
        size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw IoError(locus + ": expected a number, got '" + token + "'");
    }
}

void require_header(const std::vector<std::string>& lines, const std::string& expected,
                    const std::filesystem::path& path) {
    if (lines.empty() || trim(lines[0]) != expected)
        throw IoError(path.string() + ": expected header '" + expected + "'");
}

std::string locus(const std::filesystem::path& path, size_t row) {
    return path.string() + ":" + std::to_string(row + 1);
}

}  // namespace

Country load_populations(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    require_header(lines, "state,population", path);
    Country country;
    std::vector<double> pops;
    for (size_t k = 1; k < lines.size(); ++k) {
        if (trim(lines[k]).empty()) continue;
        const auto f = split(lines[k], ',');
        if (f.size() != 2) throw IoError(locus(path, k) + ": expected 2 fields");
        if (country.index_of(f[0]) >= 0)
            throw IoError(locus(path, k) + ": duplicate state " + f[0]);
        country.state_codes.push_back(f[0]);
        pops.push_back(parse_double(f[1], locus(path, k)));
    }
    country.populations =
        Eigen::Map<VectorXd>(pops.data(), static_cast<Eigen::Index>(pops.size()));
    return country;
}

DeathPanel load_deaths(const std::filesystem::path& path, const Country& country,
                       std::vector<std::string>* warnings) {
    const auto lines = read_lines(path);
    require_header(lines, "date,state,cumulative_deaths", path);

    std::map<Date, std::map<int, double>> cells;
    for (size_t k = 1; k < lines.size(); ++k) {
        if (trim(lines[k]).empty()) continue;
        const auto f = split(lines[k], ',');
        if (f.size() != 3) throw IoError(locus(path, k) + ": expected 3 fields");
        Date date;
        try {
            date = Date::parse(f[0]);
        } catch (const std::exception& e) {
            throw IoError(locus(path, k) + ": " + e.what());
        }
        const int j = country.index_of(f[1]);
        if (j < 0) throw IoError(locus(path, k) + ": unknown state code " + f[1]);
        const double v = parse_double(f[2], locus(path, k));
        if (!cells[date].emplace(j, v).second)
            throw IoError(locus(path, k) + ": duplicate entry for " + f[0] + "," + f[1]);
    }
    if (cells.empty()) throw IoError(path.string() + ": no data rows");

    const Date first = cells.begin()->first;
    const Date last = cells.rbegin()->first;
    const int t_len = last - first + 1;
    const int n = country.size();

    DeathPanel panel;
    panel.states = country.state_codes;
    panel.raw = MatrixXd::Zero(t_len, n);
    panel.dates.reserve(static_cast<size_t>(t_len));
    VectorXd running = VectorXd::Zero(n);
    for (int t = 0; t < t_len; ++t) {
        const Date date = first + t;
        panel.dates.push_back(date);
        const auto it = cells.find(date);
        if (it == cells.end()) {
            if (warnings)
                warnings->push_back("missing date " + date.to_string() + ": forward-filled");
            panel.raw.row(t) = running.transpose();
            continue;
        }
        for (int j = 0; j < n; ++j) {
            double v = running[j];
            const auto cell = it->second.find(j);
            if (cell == it->second.end()) {
                if (warnings)
                    warnings->push_back("missing " + date.to_string() + "," +
                                        country.state_codes[j] + ": forward-filled");
            } else {
                v = cell->second;
            }
            if (v < running[j]) {
                const double dip = (running[j] - v) / std::max(running[j], 1.0);
                if (dip > 0.05)
                    throw IoError(path.string() + ": cumulative deaths for " +
                                  country.state_codes[j] + " drop by more than 5% at " +
                                  date.to_string());
                if (warnings)
                    warnings->push_back("dip in cumulative deaths for " +
                                        country.state_codes[j] + " at " + date.to_string() +
                                        ": raised to running maximum");
                v = running[j];
            }
            running[j] = v;
            panel.raw(t, j) = v;
        }
    }
    panel.adjusted = panel.raw;
    return panel;
}

namespace {

MatrixXd load_fraction_matrix(const std::filesystem::path& path, const Country& country) {
    const auto lines = read_lines(path);
    require_header(lines, "origin,destination,daily_fraction", path);
    const int n = country.size();
    MatrixXd w = MatrixXd::Zero(n, n);
    for (size_t k = 1; k < lines.size(); ++k) {
        if (trim(lines[k]).empty()) continue;
        const auto f = split(lines[k], ',');
        if (f.size() != 3) throw IoError(locus(path, k) + ": expected 3 fields");
        const int a = country.index_of(f[0]);
        const int b = country.index_of(f[1]);
        if (a < 0) throw IoError(locus(path, k) + ": unknown state code " + f[0]);
        if (b < 0) throw IoError(locus(path, k) + ": unknown state code " + f[1]);
        if (a == b) throw IoError(locus(path, k) + ": self-loop " + f[0] + " -> " + f[1]);
        const double v = parse_double(f[2], locus(path, k));
        if (v < 0.0 || v >= 1.0)
            throw IoError(locus(path, k) + ": fraction out of [0,1)");
        w(a, b) = v;
    }
    for (int j = 0; j < n; ++j)
        if (w.row(j).sum() >= 1.0)
            throw IoError(path.string() + ": outflow fractions for state " +
                          country.state_codes[j] + " sum to >= 1");
    return w;
}

}  // namespace

mobility::MobilitySpec load_mobility(const std::filesystem::path& travel_path,
                                     const std::filesystem::path& commute_path,
                                     const Country& country) {
    mobility::MobilitySpec spec;
    spec.w_trav = load_fraction_matrix(travel_path, country);
    spec.w_com = load_fraction_matrix(commute_path, country);
    return spec;
}

PolicyCalendar load_policies(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    require_header(lines, "state,policy,start_date,end_date", path);
    PolicyCalendar calendar;
    for (size_t k = 1; k < lines.size(); ++k) {
        if (trim(lines[k]).empty()) continue;
        const auto f = split(lines[k], ',');
        if (f.size() != 4) throw IoError(locus(path, k) + ": expected 4 fields");
        try {
            calendar.add({f[0], policy_kind_from_string(f[1]), Date::parse(f[2]),
                          Date::parse(f[3])});
        } catch (const std::exception& e) {
            throw IoError(locus(path, k) + ": " + e.what());
        }
    }
    return calendar;
}

ModelParams load_params(const std::filesystem::path& path) {
    ModelParams params;
    const auto lines = read_lines(path);
    for (size_t k = 0; k < lines.size(); ++k) {
        const std::string line = trim(lines[k]);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError(locus(path, k) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const double value = parse_double(trim(line.substr(eq + 1)), locus(path, k));
        try {
            estimation::apply_override(params, key, value);
        } catch (const ConfigError& e) {
            throw IoError(locus(path, k) + ": " + e.what());
        }
    }
    return params;
}

void save_params(const ModelParams& p, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[64];
    auto line = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s = %.12g\n", key, v);
        out << buf;
    };
    line("gamma", p.gamma);
    line("delta", p.delta);
    line("kappa", p.kappa);
    line("beta_bar", p.beta_bar);
    line("sigma", p.sigma);
    line("rho", p.rho);
    line("theta_m_low", p.theta_m_low);
    line("theta_s_low", p.theta_s_low);
    line("theta_t_low", p.theta_t_low);
    line("tau_com", p.tau_com);
    line("tau_trav", p.tau_trav);
    line("meas_sd", p.meas_sd);
    line("dt", p.dt);
}

std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    std::vector<ScenarioSpec> specs;
    for (size_t k = 0; k < lines.size(); ++k) {
        const std::string line = trim(lines[k]);
        if (line.empty() || line[0] == '#') continue;
        const auto f = split(line, '|');
        if (f.size() != 5)
            throw IoError(locus(path, k) + ": expected 'name | kind | policies | scope | overrides'");
        ScenarioSpec spec;
        spec.name = f[0];
        if (f[1] == "STRICT") spec.kind = cf::ScenarioKind::Strict;
        else if (f[1] == "LOOSE") spec.kind = cf::ScenarioKind::Loose;
        else throw IoError(locus(path, k) + ": kind must be STRICT or LOOSE");
        for (const auto& token : split(f[2], ',')) {
            if (token.empty()) continue;
            try {
                spec.policies.push_back(policy_kind_from_string(token));
            } catch (const ConfigError& e) {
                throw IoError(locus(path, k) + ": " + e.what());
            }
        }
        spec.scope_state = (f[3] == "ALL") ? "" : f[3];
        for (const auto& token : split(f[4], ';')) {
            if (token.empty()) continue;
            const auto eq = token.find('=');
            if (eq == std::string::npos)
                throw IoError(locus(path, k) + ": override must be key=date");
            const std::string key = trim(token.substr(0, eq));
            Date date;
            try {
                date = Date::parse(trim(token.substr(eq + 1)));
            } catch (const std::exception& e) {
                throw IoError(locus(path, k) + ": " + e.what());
            }
            auto& ov = spec.overrides;
            if (key == "mask_start") ov.mask_start = date;
            else if (key == "mask_end") ov.mask_end = date;
            else if (key == "stay_home_start") ov.stay_home_start = date;
            else if (key == "stay_home_end") ov.stay_home_end = date;
            else if (key == "travel_ban_start") ov.travel_ban_start = date;
            else if (key == "travel_ban_end") ov.travel_ban_end = date;
            else throw IoError(locus(path, k) + ": unknown override '" + key + "'");
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

void save_deaths(const DeathPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "date,state,cumulative_deaths\n";
    char buf[64];
    for (int t = 0; t < panel.days(); ++t)
        for (int j = 0; j < panel.n_states(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.10g", panel.raw(t, j));
            out << panel.dates[static_cast<size_t>(t)].to_string() << ',' << panel.states[j]
                << ',' << buf << '\n';
        }
}

std::string content_hash_bytes(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string content_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return content_hash_bytes(ss.str());
}

LoadedInputs load_inputs(const RunConfig& config) {
    LoadedInputs li;
    li.country = load_populations(config.populations_path);
    li.params = config.params_path.empty() ? ModelParams{} : load_params(config.params_path);
    li.panel = load_deaths(config.deaths_path, li.country, &li.warnings);
    li.mobility = load_mobility(config.travel_path, config.commute_path, li.country);
    li.calendar = load_policies(config.policies_path);

    li.input_hashes["deaths"] = content_hash(config.deaths_path);
    li.input_hashes["travel"] = content_hash(config.travel_path);
    li.input_hashes["commute"] = content_hash(config.commute_path);
    li.input_hashes["policies"] = content_hash(config.policies_path);
    li.input_hashes["populations"] = content_hash(config.populations_path);
    if (!config.params_path.empty())
        li.input_hashes["params"] = content_hash(config.params_path);
    return li;
}

void write_metadata(const std::filesystem::path& path, const ModelParams& p,
                    const std::map<std::string, std::string>& input_hashes, std::uint64_t seed,
                    const std::map<std::string, std::string>& extra) {
    nlohmann::json j;
    j["version"] = "1.0";
    j["seed"] = seed;
    j["params"] = {{"gamma", p.gamma},
                   {"delta", p.delta},
                   {"kappa", p.kappa},
                   {"beta_bar", p.beta_bar},
                   {"sigma", p.sigma},
                   {"rho", p.rho},
                   {"theta_m_low", p.theta_m_low},
                   {"theta_s_low", p.theta_s_low},
                   {"theta_t_low", p.theta_t_low},
                   {"tau_com", p.tau_com},
                   {"tau_trav", p.tau_trav},
                   {"meas_sd", p.meas_sd},
                   {"dt", p.dt}};
    j["inputs"] = input_hashes;
    for (const auto& [k, v] : extra) j[k] = v;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_series_csv(const std::filesystem::path& path, const std::vector<Date>& dates,
                      const std::vector<std::pair<std::string, VectorXd>>& columns) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "date,series,value\n";
    char buf[64];
    for (const auto& [name, values] : columns) {
        if (values.size() != static_cast<Eigen::Index>(dates.size()))
            throw std::invalid_argument("series length mismatch for " + name);
        for (size_t t = 0; t < dates.size(); ++t) {
            std::snprintf(buf, sizeof(buf), "%.10g", values[static_cast<Eigen::Index>(t)]);
            out << dates[t].to_string() << ',' << name << ',' << buf << '\n';
        }
    }
}

void write_excess_csv(const std::filesystem::path& path,
                      const std::vector<cf::ExcessReportRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "scenario,state,baseline_deaths,excess_deaths,relative_excess\n";
    char buf[64];
    for (const auto& row : rows) {
        out << row.scenario << ',' << row.state << ',';
        std::snprintf(buf, sizeof(buf), "%.10g", row.baseline);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.10g", row.excess);
        out << buf << ',';
        if (row.has_relative) {
            std::snprintf(buf, sizeof(buf), "%.10g", row.relative);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace epistate::io
