#pragma once
// Passage corpus, query and qrels loading.
//
// Corpus file: one JSON object per line with fields
//   id (string), title (string), text (string), pseudo_queries (array of strings, optional)
// Queries file: qid<TAB>query text
// Qrels file:   qid 0 passage_id relevance   (whitespace separated, relevance > 0 => positive)

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "genret/common.hpp"

namespace genret {

struct Passage {
    std::string id;
    std::string title;
    std::string body;
    std::vector<std::string> pseudo_queries;
};

class CorpusStore {
public:
    void add(Passage p) {
        if (p.body.empty()) throw DataError("passage '" + p.id + "' has empty body");
        auto [it, inserted] = by_id_.emplace(p.id, passages_.size());
        if (!inserted) throw DataError("duplicate passage id '" + p.id + "'");
        passages_.push_back(std::move(p));
    }

    std::size_t size() const { return passages_.size(); }
    bool empty() const { return passages_.empty(); }

    const Passage& at(std::size_t ordinal) const { return passages_.at(ordinal); }
    const std::vector<Passage>& passages() const { return passages_; }

    bool contains(const std::string& id) const { return by_id_.count(id) != 0; }

    std::size_t ordinal_of(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) throw DataError("unknown passage id '" + id + "'");
        return it->second;
    }

    const Passage& lookup(const std::string& id) const { return passages_[ordinal_of(id)]; }

private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

inline CorpusStore load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    CorpusStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": parse failure: " + e.what());
        }
        Passage p;
        try {
            p.id = rec.at("id").get<std::string>();
            p.title = rec.value("title", std::string());
            p.body = rec.at("text").get<std::string>();
            if (rec.contains("pseudo_queries"))
                p.pseudo_queries = rec["pseudo_queries"].get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
        }
        try {
            store.add(std::move(p));
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return store;
}

struct Query {
    std::string qid;
    std::string text;
};

inline std::vector<Query> load_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open queries file: " + path);
    std::vector<Query> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected qid<TAB>text");
        out.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return out;
}

// qid -> set of positive passage ids.
struct Qrels {
    std::map<std::string, std::set<std::string>> positives;

    const std::set<std::string>* positives_for(const std::string& qid) const {
        auto it = positives.find(qid);
        return it == positives.end() ? nullptr : &it->second;
    }
};

inline Qrels load_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open qrels file: " + path);
    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, zero, pid;
        long rel = 0;
        if (!(ss >> qid >> zero >> pid >> rel))
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 'qid 0 pid rel'");
        if (rel > 0) qrels.positives[qid].insert(pid);
        else qrels.positives.try_emplace(qid);  // judged query with no positive line so far
    }
    return qrels;
}

}  // namespace genret
