#include "pocket/arena.hpp"
#include "pocket/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>

using nlohmann::json;

namespace pocket {

const HostInfo* Topology::host(const std::string& id) const {
    for (const auto& h : hosts)
        if (h.id == id) return &h;
    return nullptr;
}

namespace {

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

double get_num(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ValidationError(std::string("scenario: missing numeric field '") + key + "'");
    return j.at(key).get<double>();
}

std::string get_str(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw ValidationError(std::string("scenario: missing string field '") + key + "'");
    return j.at(key).get<std::string>();
}

ThresholdDetector parse_detector(const json& j) {
    ThresholdDetector d;
    d.trigger_class = get_str(j, "trigger_class");
    d.alert_class = get_str(j, "alert_class");
    if (j.contains("count")) d.count = j.at("count").get<uint32_t>();
    if (j.contains("threshold_bytes")) d.threshold_bytes = j.at("threshold_bytes").get<uint64_t>();
    d.window_s = get_num(j, "window");
    if (j.contains("protocol")) d.protocol = j.at("protocol").get<std::string>();
    return d;
}

} // namespace

Scenario Scenario::load(const std::filesystem::path& path) {
    json j = load_json(path);
    Scenario s;
    if (j.contains("notes")) s.notes = j.at("notes").get<std::string>();

    const json& topo = j.at("topology");
    for (const auto& h : topo.at("hosts")) {
        HostInfo info;
        info.id = get_str(h, "id");
        info.role = get_str(h, "role");
        auto addr = parse_ipv4(get_str(h, "address"));
        if (!addr) throw ValidationError("scenario: invalid host address for " + info.id);
        info.address = *addr;
        s.topology.hosts.push_back(std::move(info));
    }
    if (s.topology.hosts.empty()) throw ValidationError("scenario: topology needs at least one host");
    for (const auto& sub : topo.at("subnets")) {
        auto cidr = Ipv4Cidr::parse(sub.get<std::string>());
        if (!cidr) throw ValidationError("scenario: invalid subnet " + sub.get<std::string>());
        s.topology.subnets.push_back(*cidr);
    }
    s.topology.entry_host = get_str(topo, "entry_host");
    if (!s.topology.host(s.topology.entry_host))
        throw ValidationError("scenario: entry_host not in topology");
    auto attacker = Endpoint::parse(get_str(topo, "attacker_endpoint"));
    if (!attacker) throw ValidationError("scenario: invalid attacker_endpoint");
    s.topology.attacker_endpoint = *attacker;
    for (const auto& sub : s.topology.subnets)
        if (sub.contains(s.topology.attacker_endpoint.address))
            throw ValidationError("scenario: attacker_endpoint must lie outside all subnets");
    for (const auto& f : topo.at("sensitive_files")) {
        SensitiveFile file{get_str(f, "name"), get_str(f, "host")};
        if (!s.topology.host(file.host_id))
            throw ValidationError("scenario: sensitive file on unknown host " + file.host_id);
        s.topology.files.push_back(std::move(file));
    }

    const json& tl = j.at("timeline");
    TimelineParams& t = s.timeline;
    t.seed = tl.contains("seed") ? tl.at("seed").get<uint64_t>() : 0;
    t.scan_start = get_num(tl, "scan_start");
    t.scan_interval = get_num(tl, "scan_interval");
    t.lateral_start = get_num(tl, "lateral_start");
    t.probe_interval = get_num(tl, "probe_interval");
    t.c2_start = get_num(tl, "c2_start");
    t.beacon_interval = get_num(tl, "beacon_interval");
    t.beacon_bytes = tl.at("beacon_bytes").get<uint64_t>();
    t.exfil_staging_start = get_num(tl, "exfil_staging_start");
    t.staging_interval = get_num(tl, "staging_interval");
    t.staging_bytes = tl.at("staging_bytes").get<uint64_t>();
    t.lateral_spread_complete = get_num(tl, "lateral_spread_complete");
    t.exfil_file_interval = get_num(tl, "exfil_file_interval");
    t.post_spread_beacon_interval = get_num(tl, "post_spread_beacon_interval");
    t.scenario_end = get_num(tl, "scenario_end");

    if (!(t.scan_start < t.lateral_start && t.lateral_start < t.c2_start &&
          t.c2_start < t.exfil_staging_start &&
          t.exfil_staging_start < t.lateral_spread_complete &&
          t.lateral_spread_complete < t.scenario_end))
        throw ValidationError("scenario: phase starts must be strictly ordered");

    const json& det = j.at("detectors");
    s.detectors.beacon = parse_detector(det.at("beacon"));
    s.detectors.volume = parse_detector(det.at("volume"));
    s.detectors.probe = parse_detector(det.at("probe"));
    return s;
}

bool BlockTable::add(const Endpoint& endpoint, const std::string& scope, double applied_at) {
    for (const auto& e : entries_)
        if (e.endpoint == endpoint && e.scope == scope) return false;
    entries_.push_back({endpoint, scope, applied_at});
    return true;
}

bool BlockTable::blocked_at(const Endpoint& e, double t) const {
    for (const auto& entry : entries_)
        if (entry.endpoint == e && entry.applied_at <= t) return true;
    return false;
}

bool BlockTable::blocked_strictly_before(const Endpoint& e, double t) const {
    for (const auto& entry : entries_)
        if (entry.endpoint == e && entry.applied_at < t) return true;
    return false;
}

bool is_known_scope(const std::string& scope) {
    return scope == "global" || scope == "subnet" || scope == "host" || scope == "session";
}

// ---------------------------------------------------------------------------
// Schedule construction

struct Arena::RawEvent {
    enum class Type { flow, compromise, file_exfil, spread_decision };
    double t = 0;
    Type type = Type::flow;
    TelemetryRecord record;  // flow / file_event payload
    std::string host_id;     // compromise
    std::string file_name;   // file_exfil
    bool requires_spread = false;
};

namespace {

uint16_t ephemeral_port(std::mt19937_64& rng) {
    return static_cast<uint16_t>(49152 + rng() % 16384);
}

} // namespace

Arena::Arena(Scenario scenario) : scenario_(std::move(scenario)) {
    const Topology& topo = scenario_.topology;
    const TimelineParams& tl = scenario_.timeline;
    const HostInfo* entry = topo.host(topo.entry_host);
    std::mt19937_64 rng(tl.seed);

    auto push_flow = [&](double t, Endpoint src, Endpoint dst, const std::string& host,
                         Direction dir, uint64_t bytes, const std::string& protocol,
                         bool requires_spread) {
        RawEvent e;
        e.t = t;
        e.type = RawEvent::Type::flow;
        e.record = {t, src, dst, host, dir, bytes, protocol, RecordKind::flow};
        e.requires_spread = requires_spread;
        schedule_.push_back(std::move(e));
    };

    // Entry host is compromised at scenario start.
    {
        RawEvent e;
        e.t = 0.0;
        e.type = RawEvent::Type::compromise;
        e.host_id = topo.entry_host;
        schedule_.push_back(std::move(e));
    }

    std::vector<const HostInfo*> peers;
    for (const auto& h : topo.hosts)
        if (h.id != topo.entry_host) peers.push_back(&h);

    // Scan phase: short connection attempts from the entry host to peers.
    static const uint16_t scan_ports[] = {445, 139, 3389, 22, 80};
    size_t scan_i = 0;
    for (double t = tl.scan_start; t < tl.lateral_start; t += tl.scan_interval, ++scan_i) {
        const HostInfo* peer = peers[scan_i % peers.size()];
        push_flow(t, {entry->address, ephemeral_port(rng)},
                  {peer->address, scan_ports[scan_i % 5]}, topo.entry_host, Direction::lateral, 60,
                  "tcp_syn", false);
    }

    // Lateral probing: credential and share probes until spread completes.
    size_t probe_i = 0;
    for (double t = tl.lateral_start; t < tl.lateral_spread_complete;
         t += tl.probe_interval, ++probe_i) {
        const HostInfo* peer = peers[probe_i % peers.size()];
        push_flow(t, {entry->address, ephemeral_port(rng)}, {peer->address, 445}, topo.entry_host,
                  Direction::lateral, 1500, "smb", false);
    }

    // C2 beaconing from the entry host for the whole scenario.
    for (double t = tl.c2_start; t < tl.scenario_end; t += tl.beacon_interval) {
        push_flow(t, {entry->address, ephemeral_port(rng)}, topo.attacker_endpoint,
                  topo.entry_host, Direction::outbound, tl.beacon_bytes, "https", false);
    }

    // Data staging uploads from the entry host until the spread completes.
    for (double t = tl.exfil_staging_start; t < tl.lateral_spread_complete;
         t += tl.staging_interval) {
        push_flow(t, {entry->address, ephemeral_port(rng)}, topo.attacker_endpoint,
                  topo.entry_host, Direction::outbound, tl.staging_bytes, "https", false);
    }

    // The point of no return: if the attacker endpoint is not blocked
    // strictly before this instant, the remaining hosts are mass-deployed
    // and the staged data leaves. Late blocks do not undo either.
    {
        RawEvent e;
        e.t = tl.lateral_spread_complete;
        e.type = RawEvent::Type::spread_decision;
        schedule_.push_back(std::move(e));
    }
    for (const auto* peer : peers) {
        RawEvent e;
        e.t = tl.lateral_spread_complete;
        e.type = RawEvent::Type::compromise;
        e.host_id = peer->id;
        e.requires_spread = true;
        schedule_.push_back(std::move(e));
    }

    // Post-spread: every compromised host beacons.
    for (const auto* peer : peers) {
        for (double t = tl.lateral_spread_complete + tl.post_spread_beacon_interval;
             t < tl.scenario_end; t += tl.post_spread_beacon_interval) {
            push_flow(t, {peer->address, ephemeral_port(rng)}, topo.attacker_endpoint, peer->id,
                      Direction::outbound, tl.beacon_bytes, "https", true);
        }
    }

    // File exfiltration completions, staggered after the spread.
    double file_t = tl.lateral_spread_complete;
    for (const auto& f : topo.files) {
        file_t += tl.exfil_file_interval;
        const HostInfo* host = topo.host(f.host_id);
        push_flow(file_t, {host->address, ephemeral_port(rng)}, topo.attacker_endpoint, f.host_id,
                  Direction::outbound, 50u * 1000u * 1000u, "https", true);
        RawEvent e;
        e.t = file_t;
        e.type = RawEvent::Type::file_exfil;
        e.file_name = f.name;
        e.host_id = f.host_id;
        e.requires_spread = true;
        e.record = {file_t, {host->address, 0}, topo.attacker_endpoint, f.host_id,
                    Direction::outbound, 50u * 1000u * 1000u, "file_exfil", RecordKind::file_event};
        schedule_.push_back(std::move(e));
    }

    std::stable_sort(schedule_.begin(), schedule_.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.t < b.t; });
}

// ---------------------------------------------------------------------------
// Realization: fold the schedule against a block table up to a time bound.

struct Arena::Realized {
    std::vector<TelemetryRecord> records;
    std::vector<Trigger> triggers;
    std::vector<std::string> compromised;
    std::vector<std::string> exfiltrated;
};

namespace {

// Sliding-window detector state; each fires at most once.
struct DetectorState {
    bool fired = false;
    std::map<std::string, std::deque<std::pair<double, uint64_t>>> windows;
};

void expire(std::deque<std::pair<double, uint64_t>>& win, double t, double window_s) {
    while (!win.empty() && win.front().first <= t - window_s) win.pop_front();
}

} // namespace

Arena::Realized Arena::realize(double until_t, const BlockTable& blocks) const {
    const Topology& topo = scenario_.topology;
    const DetectorParams& det = scenario_.detectors;
    Realized out;

    bool spread_ok = false;
    DetectorState beacon_state, volume_state, probe_state;

    auto fire = [&](const ThresholdDetector& d, double t, const std::string& host, Endpoint src,
                    Endpoint dst, Direction dir, uint64_t bytes) {
        TelemetryRecord alert{t, src, dst, host, dir, bytes, d.alert_class, RecordKind::alert};
        out.records.push_back(alert);
        Trigger trig;
        trig.trigger_class = d.trigger_class;
        trig.raised_at = t;
        trig.payload = {{"host_id", host}, {"alert_class", d.alert_class}};
        trig.source_detector = d.alert_class + "_detector";
        out.triggers.push_back(std::move(trig));
    };

    for (const auto& e : schedule_) {
        if (e.t > until_t) break;

        switch (e.type) {
            case RawEvent::Type::spread_decision:
                spread_ok = !blocks.blocked_strictly_before(topo.attacker_endpoint, e.t);
                break;

            case RawEvent::Type::compromise:
                if (!e.requires_spread || spread_ok) out.compromised.push_back(e.host_id);
                break;

            case RawEvent::Type::file_exfil:
                if (spread_ok) {
                    out.exfiltrated.push_back(e.file_name);
                    out.records.push_back(e.record);
                }
                break;

            case RawEvent::Type::flow: {
                if (e.requires_spread && !spread_ok) break;
                const TelemetryRecord& r = e.record;
                if (blocks.blocked_at(r.src, r.timestamp) || blocks.blocked_at(r.dst, r.timestamp))
                    break;
                out.records.push_back(r);

                // Beacon-rate detector: repeated outbound flows to one endpoint.
                if (!beacon_state.fired && r.direction == Direction::outbound &&
                    (det.beacon.protocol.empty() || r.protocol == det.beacon.protocol)) {
                    auto& win = beacon_state.windows[r.host + "|" + r.dst.to_string()];
                    expire(win, r.timestamp, det.beacon.window_s);
                    win.emplace_back(r.timestamp, 1);
                    if (win.size() >= det.beacon.count) {
                        beacon_state.fired = true;
                        fire(det.beacon, r.timestamp, r.host, {topo.host(r.host)->address, 0},
                             r.dst, Direction::outbound, 0);
                    }
                }

                // Outbound-volume detector: per-host byte sum in a window.
                if (!volume_state.fired && r.direction == Direction::outbound) {
                    auto& win = volume_state.windows[r.host];
                    expire(win, r.timestamp, det.volume.window_s);
                    win.emplace_back(r.timestamp, r.bytes);
                    uint64_t sum = 0;
                    for (const auto& [_, b] : win) sum += b;
                    if (sum >= det.volume.threshold_bytes) {
                        volume_state.fired = true;
                        fire(det.volume, r.timestamp, r.host, {topo.host(r.host)->address, 0},
                             r.dst, Direction::outbound, sum);
                    }
                }

                // Lateral-probe detector: repeated lateral flows from one host.
                if (!probe_state.fired && r.direction == Direction::lateral &&
                    (det.probe.protocol.empty() || r.protocol == det.probe.protocol)) {
                    auto& win = probe_state.windows[r.host];
                    expire(win, r.timestamp, det.probe.window_s);
                    win.emplace_back(r.timestamp, 1);
                    if (win.size() >= det.probe.count) {
                        probe_state.fired = true;
                        fire(det.probe, r.timestamp, r.host, {topo.host(r.host)->address, 0},
                             r.dst, Direction::lateral, 0);
                    }
                }
                break;
            }
        }
    }
    return out;
}

std::vector<Trigger> Arena::triggers() const {
    return realize(scenario_.timeline.scenario_end, blocks_).triggers;
}

std::vector<TelemetryRecord> Arena::query(const Query& q, double now, uint32_t limit) const {
    Realized realized = realize(now, blocks_);
    std::vector<TelemetryRecord> matched;

    auto param = [&](const char* key) -> std::string {
        auto it = q.params.find(key);
        return it == q.params.end() ? std::string() : it->second;
    };

    switch (q.kind) {
        case QueryKind::flows_by_host: {
            std::string host = param("host");
            for (const auto& r : realized.records)
                if (r.kind == RecordKind::flow && r.host == host) matched.push_back(r);
            break;
        }
        case QueryKind::flows_to_endpoint: {
            auto ep = Endpoint::parse(param("endpoint"));
            if (!ep) break;
            for (const auto& r : realized.records)
                if (r.kind == RecordKind::flow && r.dst == *ep) matched.push_back(r);
            break;
        }
        case QueryKind::alerts_by_class: {
            std::string cls = param("class");
            for (const auto& r : realized.records)
                if (r.kind == RecordKind::alert && r.protocol == cls) matched.push_back(r);
            break;
        }
        case QueryKind::outbound_volume_by_host: {
            std::string host = param("host");
            for (const auto& r : realized.records)
                if (r.kind == RecordKind::flow && r.host == host &&
                    r.direction == Direction::outbound)
                    matched.push_back(r);
            break;
        }
    }

    // Most recent `limit` matches, returned in time order.
    if (matched.size() > limit)
        matched.erase(matched.begin(), matched.end() - static_cast<ptrdiff_t>(limit));
    return matched;
}

BlockEntry Arena::apply_block(const Endpoint& endpoint, const std::string& scope, double now) {
    invocations_ += 1;
    if (!is_known_scope(scope))
        throw ValidationError("enforcement adapter: unknown scope '" + scope + "'");
    blocks_.add(endpoint, scope, now);
    for (const auto& e : blocks_.entries())
        if (e.endpoint == endpoint && e.scope == scope) return e;
    throw ValidationError("enforcement adapter: block entry lost"); // unreachable
}

namespace {

ImpactRecord fold_impact(const std::vector<std::string>& compromised,
                         const std::vector<std::string>& exfiltrated, const std::string& entry_host,
                         const BlockTable& blocks) {
    ImpactRecord rec;
    std::set<std::string> seen;
    for (const auto& h : compromised)
        if (seen.insert(h).second) rec.infected.push_back(h);
    // The entry host is infected before any trigger fires, event log or not.
    if (seen.insert(entry_host).second) rec.infected.insert(rec.infected.begin(), entry_host);
    rec.infected_hosts = static_cast<uint32_t>(rec.infected.size());
    rec.exfiltrated = exfiltrated;
    rec.exfiltrated_files = static_cast<uint32_t>(rec.exfiltrated.size());
    rec.blocks = blocks.entries();
    rec.contained = rec.infected_hosts == 1 && rec.exfiltrated_files == 0;
    return rec;
}

} // namespace

ImpactRecord Arena::impact() const {
    Realized realized = realize(scenario_.timeline.scenario_end, blocks_);
    return fold_impact(realized.compromised, realized.exfiltrated, scenario_.topology.entry_host,
                       blocks_);
}

ScenarioRun run_scenario(const Scenario& scenario, const BlockTable& blocks) {
    Arena arena(scenario);
    Arena::Realized realized = arena.realize(scenario.timeline.scenario_end, blocks);

    ScenarioRun run;
    run.impact = fold_impact(realized.compromised, realized.exfiltrated,
                             scenario.topology.entry_host, blocks);
    run.records = std::move(realized.records);
    run.triggers = std::move(realized.triggers);
    return run;
}

} // namespace pocket
