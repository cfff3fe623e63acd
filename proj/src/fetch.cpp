#include "epistate/io.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace epistate::io {

namespace {

// Validate a CSV body against the deaths schema without materializing a
// country (codes are checked downstream by load_deaths).
void validate_deaths_csv(const std::string& body) {
    std::istringstream in(body);
    std::string line;
    if (!std::getline(in, line)) throw IoError("fetched payload is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,state,cumulative_deaths")
        throw IoError("fetched payload is not in the deaths CSV schema");
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string date, state, value;
        if (!std::getline(fields, date, ',') || !std::getline(fields, state, ',') ||
            !std::getline(fields, value))
            throw IoError("fetched payload: malformed row " + std::to_string(row));
        Date::parse(date);
        std::stod(value);
    }
}

std::string csv_from_json(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("fetched payload is neither the deaths CSV nor JSON: ") +
                      e.what());
    }
    if (!j.is_array()) throw IoError("fetched JSON payload must be an array of records");
    std::ostringstream out;
    out << "date,state,cumulative_deaths\n";
    for (const auto& rec : j) {
        if (!rec.contains("date") || !rec.contains("state") ||
            !rec.contains("cumulative_deaths"))
            throw IoError("fetched JSON record lacks date/state/cumulative_deaths");
        const std::string date = rec["date"].get<std::string>();
        Date::parse(date);
        out << date << ',' << rec["state"].get<std::string>() << ','
            << rec["cumulative_deaths"].get<double>() << '\n';
    }
    return out.str();
}

}  // namespace

std::string fetch_deaths(const std::string& url, const std::filesystem::path& output_path) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw IoError("malformed URL '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string host = url.substr(0, path_start);
    const std::string request_path =
        path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(host);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    const auto res = client.Get(request_path);
    if (!res)
        throw IoError("transport failure fetching " + url + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw IoError("fetch of " + url + " returned HTTP " + std::to_string(res->status));

    std::string csv;
    const std::string content_type = res->get_header_value("Content-Type");
    if (content_type.find("json") != std::string::npos || (!res->body.empty() && res->body[0] == '['))
        csv = csv_from_json(res->body);
    else {
        validate_deaths_csv(res->body);
        csv = res->body;
    }

    // Atomic write: temp file in the destination directory, then rename.
    const auto tmp = output_path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << csv;
    }
    std::filesystem::rename(tmp, output_path);
    return content_hash_bytes(csv);
}

}  // namespace epistate::io
