#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "pocket/backend.hpp"
#include "pocket/errors.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

using nlohmann::json;

namespace pocket {

namespace {

// Validates the fenced query object into a typed Query, or explains why it
// cannot run.
std::optional<std::string> parse_query(const json& obj, Query& out) {
    const json& q = obj.at("query");
    if (!q.is_object()) return "query must be an object";
    if (!q.contains("kind") || !q.at("kind").is_string()) return "query.kind must be a string";
    auto kind = query_kind_from_string(q.at("kind").get<std::string>());
    if (!kind) return "unknown query kind '" + q.at("kind").get<std::string>() + "'";
    out.kind = *kind;

    if (q.contains("params")) {
        if (!q.at("params").is_object()) return "query.params must be an object";
        for (auto it = q.at("params").begin(); it != q.at("params").end(); ++it) {
            if (!it.value().is_string()) return "query param '" + it.key() + "' must be a string";
            out.params[it.key()] = it.value().get<std::string>();
        }
    }
    if (q.contains("limit")) {
        if (!q.at("limit").is_number_unsigned()) return "query.limit must be a non-negative integer";
        out.limit = q.at("limit").get<uint32_t>();
    }

    auto need = [&](const char* key) -> std::optional<std::string> {
        if (out.params.count(key) == 0)
            return std::string("query kind ") + to_string(out.kind) + " requires param '" + key + "'";
        return std::nullopt;
    };
    switch (out.kind) {
        case QueryKind::flows_by_host:
        case QueryKind::outbound_volume_by_host:
            return need("host");
        case QueryKind::flows_to_endpoint: {
            if (auto missing = need("endpoint")) return missing;
            if (!Endpoint::parse(out.params.at("endpoint")))
                return "query param 'endpoint' is not a valid a.b.c.d:port endpoint";
            return std::nullopt;
        }
        case QueryKind::alerts_by_class:
            return need("class");
    }
    return std::nullopt;
}

} // namespace

TurnParse parse_turn(std::string text) {
    TurnParse parsed;
    parsed.turn.text = std::move(text);

    FenceScan scan = scan_json_fences(parsed.turn.text);
    if (!scan.last_object || !scan.last_object->contains("query")) {
        parsed.turn.kind = BackendTurn::Kind::final_text;
        return parsed;
    }

    parsed.turn.kind = BackendTurn::Kind::query_request;
    Query q;
    if (auto problem = parse_query(*scan.last_object, q)) {
        parsed.query_problem = problem;
    } else {
        parsed.turn.query = std::move(q);
    }
    return parsed;
}

ReplayScript ReplayScript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw OrchestrationError("backend", "cannot open replay script: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw OrchestrationError("backend", path.string() + ": " + e.what());
    }

    ReplayScript script;
    try {
        script.trial_id = j.at("trial_id").get<std::string>();
        script.agent_id = j.at("agent_id").get<std::string>();
        script.backend_id = j.at("backend_id").get<std::string>();
        auto mode = grounding_mode_from_string(j.at("mode").get<std::string>());
        if (!mode) throw OrchestrationError("backend", path.string() + ": unknown grounding mode");
        script.mode = *mode;
        for (const auto& t : j.at("turns")) {
            ScriptTurn turn;
            turn.latency_s = t.at("latency_s").get<double>();
            turn.text = t.at("text").get<std::string>();
            if (turn.latency_s < 0)
                throw OrchestrationError("backend", path.string() + ": negative turn latency");
            script.turns.push_back(std::move(turn));
        }
    } catch (const json::exception& e) {
        throw OrchestrationError("backend", path.string() + ": " + e.what());
    }
    return script;
}

ScriptedBackend::ScriptedBackend(ReplayScript script) : script_(std::move(script)) {}

std::string ScriptedBackend::next_text(const std::string& /*message*/, SimClock& clock) {
    if (cursor_ >= script_.turns.size()) throw ScriptExhausted(script_.trial_id);
    const ScriptTurn& turn = script_.turns[cursor_++];
    clock.advance(turn.latency_s);
    return turn.text;
}

HttpBackend::HttpBackend(std::string backend_id, std::string base_url, std::string model,
                         std::string api_key)
    : backend_id_(std::move(backend_id)),
      base_url_(std::move(base_url)),
      model_(std::move(model)),
      api_key_(std::move(api_key)) {}

std::unique_ptr<HttpBackend> HttpBackend::from_env(const std::string& backend_id) {
    const char* url = std::getenv("POCKET_BACKEND_URL");
    const char* key = std::getenv("POCKET_BACKEND_KEY");
    const char* model = std::getenv("POCKET_BACKEND_MODEL");

    std::string missing;
    if (url == nullptr || *url == '\0') missing += " POCKET_BACKEND_URL";
    if (key == nullptr || *key == '\0') missing += " POCKET_BACKEND_KEY";
    if (!missing.empty())
        throw OrchestrationError("backend_config",
                                 "live backend '" + backend_id + "' unconfigured:" + missing);

    return std::make_unique<HttpBackend>(backend_id, url,
                                         model != nullptr && *model != '\0' ? model : backend_id,
                                         key);
}

std::string HttpBackend::next_text(const std::string& message, SimClock& clock) {
    history_.emplace_back("user", message);

    json body;
    body["model"] = model_;
    json messages = json::array();
    for (const auto& [role, content] : history_)
        messages.push_back({{"role", role}, {"content", content}});
    body["messages"] = messages;

    std::string path = "/chat/completions";
    std::string host = base_url_;
    // Accept a base URL with or without the chat-completions suffix.
    if (host.size() >= path.size() && host.compare(host.size() - path.size(), path.size(), path) == 0) {
        host = host.substr(0, host.size() - path.size());
    }
    // Split scheme://authority from any base path.
    std::string prefix;
    auto scheme_end = host.find("://");
    if (scheme_end != std::string::npos) {
        auto path_start = host.find('/', scheme_end + 3);
        if (path_start != std::string::npos) {
            prefix = host.substr(path_start);
            host = host.substr(0, path_start);
        }
    }

    httplib::Client client(host);
    client.set_read_timeout(120, 0);
    httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

    auto start = std::chrono::steady_clock::now();
    auto res = client.Post(prefix + path, headers, body.dump(), "application/json");
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    clock.advance(elapsed);

    if (!res)
        throw OrchestrationError("backend_http",
                                 "no response from " + host + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw OrchestrationError("backend_http",
                                 "backend returned HTTP " + std::to_string(res->status) + ": " + res->body);

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply.at("choices").is_array() ||
        reply.at("choices").empty())
        throw OrchestrationError("backend_http", "malformed chat-completions response");
    const json& msg = reply.at("choices").at(0).at("message");
    std::string content = msg.at("content").get<std::string>();

    history_.emplace_back("assistant", content);
    return content;
}

std::unique_ptr<Backend> open_backend(const std::string& backend_spec) {
    const std::string script_prefix = "script:";
    if (backend_spec.rfind(script_prefix, 0) == 0) {
        auto path = backend_spec.substr(script_prefix.size());
        return std::make_unique<ScriptedBackend>(ReplayScript::load(path));
    }
    return HttpBackend::from_env(backend_spec);
}

} // namespace pocket
