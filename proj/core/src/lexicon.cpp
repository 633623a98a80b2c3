// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cipherpix/common.hpp"

namespace cipherpix {

namespace {

// Rough frequency order; weight decays with rank below.
const char* const kGermanWords[] = {
    "der", "die", "und", "in", "den", "von", "zu", "das", "mit", "sich",
    "des", "auf", "fuer", "ist", "im", "dem", "nicht", "ein", "eine", "als",
    "auch", "es", "an", "werden", "aus", "er", "hat", "dass", "sie", "nach",
    "wird", "bei", "einer", "um", "am", "sind", "noch", "wie", "einem", "ueber",
    "einen", "so", "zum", "war", "haben", "nur", "oder", "aber", "vor", "zur",
    "bis", "mehr", "durch", "man", "sein", "wurde", "wenn", "unter", "wir", "soll",
    "ich", "eines", "jahr", "zwei", "diese", "dieser", "wieder", "keine", "seiner", "worden",
    "will", "zwischen", "immer", "was", "sagte", "gibt", "alle", "seit", "muss", "doch",
    "jetzt", "drei", "neue", "damit", "bereits", "da", "ab", "ohne", "sondern", "selbst",
    "ersten", "nun", "etwa", "heute", "weil", "ihre", "dann", "ihm", "kann", "schon",
    "dieses", "ihr", "dies", "hatte", "waren", "gegen", "vom", "koennen", "hier", "beim",
    "sehr", "gab", "ihren", "land", "also", "bisher", "kommt", "mir", "gut", "viele",
    "neuen", "sollen", "ihrer", "jedoch", "mich", "geht", "wer", "allem", "machen", "keinen",
    "wegen", "denen", "weiter", "macht", "weniger", "etwas", "frau", "mal", "tag", "ende",
    "deutlich", "allen", "beiden", "lassen", "menschen", "sagt", "nichts", "dennoch", "teil", "statt",
    "lange", "stehen", "dabei", "konnte", "seinem", "kein", "ganz", "jahren", "koennte", "stadt",
    "steht", "waehrend", "wollen", "deren", "zudem", "dafuer", "beispiel", "zeit", "erst", "gemacht",
    "leben", "nehmen", "wurden", "geld", "sollte", "davon", "ihnen", "bleibt", "daran", "fast",
    "strasse", "hatten", "denn", "kinder", "wo", "recht", "dort", "frage", "stellt", "fall",
    "arbeit", "eigenen", "moeglich", "spaeter", "sogar", "erste", "rund", "zwar", "seine", "ihn",
    "uns", "neben", "welt", "kam", "liegt", "laut", "anderen", "gerade", "frauen", "vielleicht",
    "dazu", "kommen", "platz", "weg", "grosse", "daher", "innerhalb", "gehen", "wohl", "beide",
    "wissen", "letzten", "geben", "seinen", "mann", "folgen", "woche", "je", "finden", "nie",
    "jeder", "bleiben", "weitere", "liegen", "hand", "stark", "wert", "haus", "setzen", "kosten",
    "namen", "lang", "gruppe", "gar", "eher", "oft", "mehrere", "natuerlich", "darauf", "bald",
    "wasser", "feuer", "erde", "luft", "himmel", "sonne", "mond", "stern", "berg", "tal",
    "wald", "baum", "blume", "gras", "stein", "sand", "meer", "fluss", "see", "regen",
    "schnee", "wind", "sturm", "wolke", "nebel", "licht", "schatten", "nacht", "morgen", "abend",
    "winter", "sommer", "herbst", "montag", "dienstag", "mittwoch", "donnerstag", "freitag", "samstag", "sonntag",
    "januar", "februar", "maerz", "april", "mai", "juni", "juli", "august", "september", "oktober",
    "november", "dezember", "vater", "mutter", "bruder", "schwester", "sohn", "tochter", "onkel", "tante",
    "familie", "freund", "nachbar", "lehrer", "schueler", "arzt", "koenig", "koenigin", "prinz", "ritter",
    "bauer", "fischer", "jaeger", "schmied", "mueller", "baecker", "brot", "milch", "honig", "salz",
    "zucker", "mehl", "butter", "kaese", "fleisch", "fisch", "apfel", "birne", "kirsche", "pflaume",
    "traube", "nuss", "wein", "bier", "saft", "tee", "kaffee", "suppe", "kuchen", "tisch",
    "stuhl", "bett", "schrank", "tuer", "fenster", "wand", "dach", "keller", "kueche", "zimmer",
    "garten", "hof", "zaun", "bruecke", "turm", "kirche", "schloss", "markt", "dorf", "gasse",
    "pferd", "kuh", "schaf", "ziege", "schwein", "hund", "katze", "maus", "vogel", "adler",
    "falke", "taube", "schwan", "ente", "gans", "huhn", "hahn", "fuchs", "wolf", "baer",
    "hirsch", "reh", "hase", "igel", "biene", "fliege", "spinne", "schlange", "frosch", "buch",
    "brief", "papier", "feder", "tinte", "wort", "satz", "sprache", "stimme", "lied", "musik",
    "tanz", "spiel", "bild", "farbe", "form", "kreis", "linie", "punkt", "zahl", "summe",
    "schule", "kopf", "auge", "ohr", "nase", "mund", "zahn", "haar", "hals", "bein",
    "fuss", "knie", "herz", "blut", "haut", "seele", "geist", "kraft", "mut", "angst",
    "freude", "sorge", "liebe", "traum", "schlaf", "hunger", "durst", "schmerz", "wunde", "zauber",
    "maerchen", "geschichte", "anfang", "mitte", "ziel", "pfad", "reise", "fahrt", "schritt", "sprung",
    "lauf", "ruhe", "klang", "ton", "stunde", "minute", "sekunde", "moment", "zukunft", "geburt",
    "tod", "grab", "erbe", "schatz", "gold", "muenze", "preis", "lohn", "handel", "ware",
    "last", "schiff", "boot", "segel", "anker", "hafen", "insel", "kueste", "ufer", "welle",
    "strand", "quelle", "brunnen", "kette", "ring", "krone", "schwert", "schild", "bogen", "pfeil",
    "fahne", "sieg", "krieg", "friede", "feind", "held", "ehre", "schuld", "strafe", "gnade",
    "gericht", "gesetz", "ordnung", "pflicht", "dienst", "herr", "dame", "gast", "wirt", "fest",
};

}  // namespace

void Lexicon::finalize(int max_chars) {
    require(!words.empty(), "lexicon: empty word list");
    require(weights.size() == words.size(), "lexicon: weight count mismatch");
    std::set<std::string> seen;
    for (size_t i = 0; i < words.size(); ++i) {
        require(!words[i].empty(), "lexicon: empty word");
        require(static_cast<int>(words[i].size()) <= max_chars,
                "lexicon: word longer than max_chars: '" + words[i] + "'");
        require(seen.insert(words[i]).second, "lexicon: duplicate word '" + words[i] + "'");
        require(weights[i] > 0.0, "lexicon: non-positive weight for '" + words[i] + "'");
    }
    cumulative.resize(weights.size());
    double total = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        total += weights[i];
        cumulative[i] = total;
    }
}

const std::string& Lexicon::draw(Rng& rng) const {
    const double r = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    const size_t idx = std::min(static_cast<size_t>(it - cumulative.begin()), words.size() - 1);
    return words[idx];
}

const Lexicon& builtin_german_lexicon() {
    static const Lexicon lex = [] {
        Lexicon l;
        const size_t n = sizeof(kGermanWords) / sizeof(kGermanWords[0]);
        l.words.reserve(n);
        l.weights.reserve(n);
        for (size_t i = 0; i < n; ++i) {
            l.words.emplace_back(kGermanWords[i]);
            l.weights.push_back(1.0 / std::pow(static_cast<double>(i + 1), 0.85));
        }
        l.finalize();
        return l;
    }();
    return lex;
}

Lexicon load_lexicon_tsv(const std::string& path, int max_chars) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("lexicon: cannot open " + path);
    }
    Lexicon lex;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        std::string word = tab == std::string::npos ? line : line.substr(0, tab);
        double weight = 1.0;
        if (tab != std::string::npos) {
            try {
                weight = std::stod(line.substr(tab + 1));
            } catch (const std::exception&) {
                throw InvalidArgument("lexicon: bad weight in line '" + line + "'");
            }
        }
        lex.words.push_back(std::move(word));
        lex.weights.push_back(weight);
    }
    lex.finalize(max_chars);
    return lex;
}

std::string sample_plaintext(const Lexicon& lexicon, Rng& rng, int max_chars, int max_words) {
    require(!lexicon.words.empty() && !lexicon.cumulative.empty(),
            "sample_plaintext: lexicon not finalized");
    require(max_chars >= 1 && max_words >= 1, "sample_plaintext: bad envelope");

    // Skewed toward short lines; the envelope bounds stay authoritative.
    const int target_words =
        1 + static_cast<int>(std::pow(rng.uniform(), 1.6) * max_words);
    const int goal = std::min(target_words, max_words);

    std::string line = lexicon.draw(rng);
    require(static_cast<int>(line.size()) <= max_chars,
            "sample_plaintext: lexicon word exceeds max_chars");
    int words = 1;
    while (words < goal) {
        const std::string& w = lexicon.draw(rng);
        if (static_cast<int>(line.size() + 1 + w.size()) > max_chars) {
            break;
        }
        line += ' ';
        line += w;
        ++words;
    }
    return line;
}

}  // namespace cipherpix
