// Regenerates the replay fixtures under tests/fixtures/bench. Every model
// reply comes from a scripted policy; the transcripts are keyed, so they must
// be regenerated whenever a prompt template or request slot changes.
//
//   htp_fixturegen <repo root>

#include <filesystem>
#include <iostream>
#include <map>

#include "htp/common.hpp"
#include "htp/executors.hpp"
#include "htp/runner.hpp"

using namespace htp;
namespace fs = std::filesystem;

namespace {

struct Script {
  std::string outline;                // target outline text
  std::vector<std::vector<std::string>> leaf_steps;  // replies per leaf; empty entries get the default
  std::string plan;                   // GeneratePlan reply
};

std::string between(const std::string& s, const std::string& open, const std::string& close) {
  auto b = s.find(open);
  if (b == std::string::npos) throw std::runtime_error("prompt lacks '" + open + "'");
  b += open.size();
  return s.substr(b, s.find(close, b) - b);
}

std::shared_ptr<Backend> policy(const Script& script, std::shared_ptr<const RuleLibrary> lib) {
  auto target = std::make_shared<HyperTree>(parse_outline(script.outline, std::make_shared<LibraryGrammar>(lib)));
  auto kids = std::make_shared<std::map<std::string, std::string>>();
  for (NodeId id : target->node_ids()) {
    if (target->is_leaf(id)) continue;
    std::string reply;
    for (NodeId c : target->edges()[target->branches_of(id)[0]].children) reply += target->node(c).text + "\n";
    (*kids)[target->node(id).text] = reply;
  }
  auto steps_taken = std::make_shared<std::map<std::size_t, std::size_t>>();
  return std::make_shared<CallbackBackend>([=](const BackendCall& c) {
    std::string raw;
    switch (c.role) {
      case Role::SelectNode:
      case Role::DecideOutline:
      case Role::RetrieveRules:
        raw = "1";
        break;
      case Role::FilterChains:
        raw = "1, 2";
        break;
      case Role::ScoreConfidence:
        raw = "50";
        break;
      case Role::ExpandNode:
        raw = kids->at(between(c.prompt, "Break down the node ", " using this rule:"));
        break;
      case Role::RefineNode:
        raw = "This part covers " + between(c.prompt, "Refine the node ", ": state") + " for the task.";
        break;
      case Role::SolveSubtask: {
        std::size_t k = std::stoul(between(c.prompt, "Current subtask (", " of")) - 1;
        std::size_t step = (*steps_taken)[k]++;
        const auto& replies = k < script.leaf_steps.size() ? script.leaf_steps[k] : std::vector<std::string>{};
        raw = step < replies.size() ? replies[step] : "Nothing is left to do here. The subtask is achieved.";
        break;
      }
      case Role::GeneratePlan:
        raw = script.plan;
        break;
    }
    return BackendReply{raw, {c.prompt.size() / 4, raw.size() / 4 + 1}};
  });
}

void record(const RunConfig& cfg, std::shared_ptr<const RuleLibrary> lib, const Script& script,
            const std::string& query, PlanFormat format, const KnowledgeBase& kb, const std::string& transcript) {
  fs::remove(transcript);
  auto rec = std::make_shared<RecordingBackend>(policy(script, lib), transcript);
  auto scratch = fs::temp_directory_path() / "htp_fixturegen";
  auto run = run_instance(cfg, lib, query, format, kb, scratch.string(), "", rec);
  std::cout << transcript << ": " << rec->recorded() << " replies, plan "
            << (run.plan->delivered ? "delivered" : "undelivered") << "\n";
  if (text::trim(render_outline(run.build->outline)) != text::trim(script.outline))
    std::cout << "  warning: outline differs from the target\n" << render_outline(run.build->outline);
  fs::remove_all(scratch);
}

// One reply per action, each with the state it leads to; the last one closes the subtask.
std::vector<std::vector<std::string>> blocks_steps(const BlocksState& init, const std::vector<std::string>& actions,
                                                   const std::vector<std::size_t>& per_leaf) {
  std::vector<std::vector<std::string>> out;
  BlocksState s = init;
  std::size_t a = 0;
  for (std::size_t n : per_leaf) {
    std::vector<std::string> replies;
    for (std::size_t i = 0; i < n; ++i, ++a) {
      s = apply(s, parse_blocks_action(actions[a]));
      replies.push_back("I can " + actions[a] + ".\nThe current state is: " + describe(s) + ".");
    }
    if (replies.empty()) replies.push_back("This already holds in the current state. The subtask is achieved.");
    else replies.back() += "\nThe subtask is achieved.";
    out.push_back(replies);
  }
  return out;
}

std::string plan_block(const std::vector<std::string>& actions) {
  std::string out = "[PLAN]\n";
  for (const auto& a : actions) out += a + "\n";
  return out + "[PLAN END]";
}

std::string jsonl(const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

const char* kTowerQuery =
    "I am playing with a set of blocks. As initial conditions I have that the yellow block is clear, the hand is "
    "empty, the yellow block is on top of the blue block, the blue block is on top of the red block, the red block is "
    "on top of the orange block and the orange block is on the table. My goal is to have that the red block is on "
    "top of the orange block and the orange block is on top of the blue block.";

void blocksworld(const fs::path& root, const fs::path& fixtures) {
  auto lib = std::make_shared<const RuleLibrary>(load_library((root / "data/libraries/blocksworld.htl").string()));
  RunConfig cfg;
  auto dir = fixtures / "bench/blocksworld";
  fs::create_directories(dir);
  std::vector<nlohmann::json> rows;

  // Golden tower instance: five leaves carry actions, the rest already hold.
  {
    std::vector<std::string> init{"yellow on blue", "blue on red", "red on orange", "orange on table", "hand empty"};
    auto plan = parse_blocks_plan(text::read_file((fixtures / "plans/blocksworld.txt").string()));
    Script s{text::read_file((fixtures / "outlines/blocksworld.txt").string()),
             blocks_steps(blocks_state_from_atoms(init), plan.actions, {1, 3, 1, 0, 0, 0, 3, 0, 0, 2}),
             plan_block(plan.actions)};
    record(cfg, lib, s, kTowerQuery, PlanFormat::BlocksPlan, {}, (dir / "tower.jsonl").string());
    rows.push_back({{"id", "tower"},
                    {"query", kTowerQuery},
                    {"init", init},
                    {"goal", {"red on orange", "orange on blue"}}});
  }
  // Two-block swap.
  {
    std::string q =
        "As initial conditions I have that the red block is clear, the hand is empty, the red block is on top of the "
        "green block and the green block is on the table. My goal is to have that the green block is on top of the "
        "red block.";
    std::vector<std::string> init{"red on green", "green on table", "hand empty"};
    std::vector<std::string> actions{"unstack the red block from on top of the green block", "put down the red block",
                                     "pick up the green block", "stack the green block on top of the red block"};
    Script s{"[Plan]\n    [Red block on the table]\n        [to get the red block clear]\n"
             "        [to get the red block on the table]\n    [Green block on top of Red block]\n"
             "        [to get the green block clear]\n        [to get the red block clear]\n"
             "        [to get the green block on top of the red block]\n",
             blocks_steps(blocks_state_from_atoms(init), actions, {0, 2, 0, 0, 2}), plan_block(actions)};
    record(cfg, lib, s, q, PlanFormat::BlocksPlan, {}, (dir / "swap.jsonl").string());
    rows.push_back({{"id", "swap"}, {"query", q}, {"init", init}, {"goal", {"green on red"}}});
  }
  // The plan block is never closed, so the plan is not delivered.
  {
    std::string q =
        "As initial conditions I have that the cyan block is clear, the purple block is clear, the hand is empty, "
        "and both blocks are on the table. My goal is to have that the purple block is on top of the cyan block.";
    std::vector<std::string> init{"cyan on table", "purple on table", "hand empty"};
    std::vector<std::string> actions{"pick up the purple block", "stack the purple block on top of the cyan block"};
    Script s{"[Plan]\n    [Purple block on top of Cyan block]\n        [to get the purple block clear]\n"
             "        [to get the cyan block clear]\n        [to get the purple block on top of the cyan block]\n",
             blocks_steps(blocks_state_from_atoms(init), actions, {0, 0, 2}),
             "[PLAN]\npick up the purple block\nstack the purple block on top of the cyan block\n"};
    record(cfg, lib, s, q, PlanFormat::BlocksPlan, {}, (dir / "broken.jsonl").string());
    rows.push_back({{"id", "broken"}, {"query", q}, {"init", init}, {"goal", {"purple on cyan"}}});
  }
  text::write_file((fixtures / "bench/blocksworld.jsonl").string(), jsonl(rows));
}

void trip(const fs::path& root, const fs::path& fixtures) {
  auto lib = std::make_shared<const RuleLibrary>(load_library((root / "data/libraries/trip.htl").string()));
  RunConfig cfg;
  auto dir = fixtures / "bench/trip";
  fs::create_directories(dir);
  std::vector<nlohmann::json> rows;
  {
    std::string q =
        "You plan to visit 3 European cities for 7 days in total. You only take direct flights to commute between "
        "cities. You would like to visit Tallinn for 2 days. You want to spend 4 days in Berlin, where you attend a "
        "conference between day 2 and day 5. You plan to stay in Venice for 3 days. Here are the cities that have "
        "direct flights: Tallinn and Berlin, Berlin and Venice. Find a trip plan of visiting the cities for 7 days by "
        "taking direct flights to commute between them.";
    std::string plan = text::read_file((fixtures / "plans/trip.txt").string());
    Script s{"[Plan]\n    [Cities with determine dates]\n        [Berlin]\n            [from day 2 to day 5]\n"
             "    [Cities with undetermine dates]\n        [Tallinn]\n            [from day 1 to day 2]\n"
             "        [Venice]\n            [from day 5 to day 7]\n",
             {{"Berlin is fixed by the conference. I will submit: \"Berlin from day 2 to day 5\""},
              {"Tallinn comes first and has a direct flight to Berlin. I will submit: \"Tallinn from day 1 to day 2\""},
              {"Venice follows Berlin. I will submit: \"Venice from day 5 to day 7\""}},
             plan};
    record(cfg, lib, s, q, PlanFormat::TripPlan, {}, (dir / "tallinn.jsonl").string());
    rows.push_back({{"id", "tallinn"}, {"query", q}, {"gold", render_trip_plan(parse_trip_plan(plan))}});
  }
  // The reply is well formed but puts the flight a day early.
  {
    std::string q =
        "You plan to visit 2 European cities for 5 days in total. You only take direct flights to commute between "
        "cities. You want to spend 3 days in Oslo. You plan to stay in Rome for 3 days and meet a friend there "
        "between day 3 and day 5. Here are the cities that have direct flights: Oslo and Rome. Find a trip plan of "
        "visiting the cities for 5 days by taking direct flights to commute between them.";
    std::string gold =
        "**Day 1-3:** Visit Oslo for 3 days\n**Day 3:** Fly from Oslo to Rome\n**Day 3-5:** Visit Rome for 3 days\n";
    std::string reply =
        "**Day 1-2:** Visit Oslo for 2 days\n**Day 2:** Fly from Oslo to Rome\n**Day 2-5:** Visit Rome for 4 days\n";
    Script s{"[Plan]\n    [Cities with determine dates]\n        [Rome]\n            [from day 2 to day 5]\n"
             "    [Cities with undetermine dates]\n        [Oslo]\n            [from day 1 to day 2]\n",
             {}, reply};
    record(cfg, lib, s, q, PlanFormat::TripPlan, {}, (dir / "oslo.jsonl").string());
    rows.push_back({{"id", "oslo"}, {"query", q}, {"gold", gold}});
  }
  text::write_file((fixtures / "bench/trip.jsonl").string(), jsonl(rows));
}

void write_knowledge(const fs::path& dir) {
  fs::create_directories(dir);
  text::write_file((dir / "manifest.json").string(),
                   nlohmann::json{{"tables",
                                   {{{"name", "flights"}, {"file", "flights.csv"}},
                                    {{"name", "distances"}, {"file", "distances.csv"}},
                                    {{"name", "accommodations"}, {"file", "accommodations.csv"}},
                                    {{"name", "restaurants"}, {"file", "restaurants.csv"}},
                                    {{"name", "attractions"}, {"file", "attractions.csv"}}}}}
                           .dump(2) + "\n");
  text::write_file((dir / "flights.csv").string(),
                   "flight_number,price,dep_time,arr_time,origin,dest,date\n"
                   "F3956409,145,17:36,19:12,Houston,Nashville,2022-03-21\n"
                   "F3956410,212,08:05,09:41,Houston,Nashville,2022-03-21\n"
                   "F3998841,198,11:20,14:02,Chattanooga,Houston,2022-03-26\n");
  text::write_file((dir / "distances.csv").string(),
                   "origin,dest,mode,duration,cost\n"
                   "Houston,Nashville,taxi,12 hours 40 mins,1253\n"
                   "Houston,Nashville,self-driving,12 hours 40 mins,62\n"
                   "Nashville,Knoxville,taxi,2 hours 42 mins,273\n"
                   "Nashville,Knoxville,self-driving,2 hours 42 mins,13\n"
                   "Knoxville,Chattanooga,taxi,1 hour 41 mins,170\n"
                   "Knoxville,Chattanooga,self-driving,1 hour 41 mins,8\n"
                   "Chattanooga,Houston,taxi,11 hours 47 mins,1171\n"
                   "Chattanooga,Houston,self-driving,11 hours 47 mins,58\n");
  text::write_file((dir / "accommodations.csv").string(),
                   "name,city,price,room_type,house_rules,minimum_nights,max_occupancy\n"
                   "Lovely room in heart of Williamsburg,Nashville,61,Private room,No parties,1,4\n"
                   "FiDi Cozy room overlooking East River,Nashville,870,Private room,,1,5\n"
                   "Clean and large bedroom in a private house,Nashville,95,Private room,No smoking,2,2\n"
                   "Light-filled Room in Renovated Apt,Knoxville,78,Private room,No pets,2,2\n"
                   "Sunny shared loft,Knoxville,30,Shared room,,1,1\n"
                   "Affordable Private Spacious Room in Brooklyn,Chattanooga,83,Private room,No visitors,2,2\n");
  text::write_file((dir / "restaurants.csv").string(),
                   "name,city,avg_cost,cuisines\n"
                   "Twigly,Nashville,42,\"French, Bakery\"\n"
                   "Bablu Fast Food,Nashville,12,\"Mexican, Fast Food\"\n"
                   "Kitchen King,Nashville,18,Indian\n"
                   "Govinda's Confectionery,Nashville,20,\"Desserts, Tea\"\n"
                   "Biryani By Kilo,Knoxville,35,\"French, Indian\"\n"
                   "Open Kitchen,Knoxville,24,\"Mexican, Cafe\"\n"
                   "Chit Chat,Knoxville,15,Cafe\n"
                   "Mamagoto,Knoxville,30,\"Chinese, Thai\"\n"
                   "La-Nawaab,Knoxville,26,Indian\n"
                   "Tandoori Tadka,Knoxville,22,Indian\n"
                   "Tpot,Chattanooga,28,\"French, Tea\"\n"
                   "Liquid,Chattanooga,19,\"Mexican, Bar\"\n"
                   "Muradabadi,Chattanooga,16,Indian\n"
                   "Burger's King,Chattanooga,11,Fast Food\n"
                   "Basil Tree,Chattanooga,25,Thai\n"
                   "Sardar A Pure Meat Shop,Chattanooga,21,BBQ\n"
                   "Pizza Hut Delivery,Chattanooga,14,Pizza\n");
  text::write_file((dir / "attractions.csv").string(),
                   "name,city\n"
                   "Country Music Hall of Fame and Museum,Nashville\n"
                   "Nashville Zoo at Grassmere,Nashville\n"
                   "World's Fair Park,Knoxville\n"
                   "Knoxville Museum of Art,Knoxville\n"
                   "The Chattanooga Zoo at Warner Park,Chattanooga\n"
                   "Rock City Gardens,Chattanooga\n"
                   "Tennessee Aquarium,Chattanooga\n");
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) s.replace(at, from.size(), to);
  return s;
}

void travelplanner(const fs::path& root, const fs::path& fixtures) {
  auto lib = std::make_shared<const RuleLibrary>(load_library((root / "data/libraries/travelplanner.htl").string()));
  RunConfig cfg;
  cfg.params.adapt_definite = true;
  const std::string georgia = text::read_file((fixtures / "outlines/travelplanner.txt").string());

  // Outline only, for the golden replay of the worked outline.
  {
    std::string q =
        "Please help me plan a trip from Fort Lauderdale to 3 different cities in Georgia for 7 days, from March 8th "
        "to March 14th, 2022. The budget for this trip is $6,400.";
    std::string path = (fixtures / "bench/travelplanner_outline.jsonl").string();
    fs::remove(path);
    auto rec = std::make_shared<RecordingBackend>(policy({georgia, {}, ""}, lib), path);
    ModelGateway gw(rec, TemplateStore::builtin(), cfg.gateway);
    OutlineBuilder b(lib, gw, cfg.params);
    auto res = b.build(q);
    std::cout << path << ": " << rec->recorded() << " replies\n";
    if (text::trim(render_outline(res.outline)) != text::trim(georgia)) std::cout << "  warning: outline differs\n";
    text::write_file((fixtures / "bench/travelplanner_outline.json").string(),
                     nlohmann::json{{"query", q}, {"adapt_definite", true}}.dump(2) + "\n");
  }

  write_knowledge(fixtures / "bench/knowledge");
  auto kb = KnowledgeBase::load((fixtures / "bench/knowledge/manifest.json").string());
  std::string outline = georgia;
  outline = replace_all(outline, "Fort Lauderdale", "Houston");
  outline = replace_all(outline, "City 1 in Georgia", "Nashville");
  outline = replace_all(outline, "City 2 in Georgia", "Knoxville");
  outline = replace_all(outline, "City 3 in Georgia", "Chattanooga");

  // The final leaf of each mode or city subtree submits the entity the golden plan uses.
  auto target = parse_outline(outline, std::make_shared<LibraryGrammar>(lib));
  std::map<std::string, std::string> submit{
      {"[Transportation from Houston to Nashville]/[Flight]",
       "Flights are cheaper than a taxi for two. I will submit: \"Flight Number: F3956409, from Houston to "
       "Nashville, Departure Time: 17:36, Arrival Time: 19:12\""},
      {"[Transportation from Nashville to Knoxville]/[Taxi]",
       "No flight and no self-driving, so a taxi. I will submit: \"taxi, from Nashville to Knoxville, duration: 2 "
       "hours 42 mins\""},
      {"[Transportation from Knoxville to Chattanooga]/[Taxi]",
       "I will submit: \"taxi, from Knoxville to Chattanooga, duration: 1 hour 41 mins\""},
      {"[Transportation from Chattanooga to Houston]/[Taxi]",
       "I will submit: \"taxi, from Chattanooga to Houston, duration: 11 hours 47 mins\""},
      {"[Accommodation for Nashville]", "I will submit: \"Lovely room in heart of Williamsburg, Nashville\""},
      {"[Accommodation for Knoxville]", "I will submit: \"Light-filled Room in Renovated Apt, Knoxville\""},
      {"[Accommodation for Chattanooga]",
       "I will submit: \"Affordable Private Spacious Room in Brooklyn, Chattanooga\""},
      {"[Attraction for Nashville]",
       "I will submit: \"Country Music Hall of Fame and Museum, Nashville\" for day 1 and \"Nashville Zoo at "
       "Grassmere, Nashville\" for day 2"},
      {"[Attraction for Knoxville]",
       "I will submit: \"World's Fair Park, Knoxville\" for day 3 and \"Knoxville Museum of Art, Knoxville\" for day "
       "4"},
      {"[Attraction for Chattanooga]",
       "I will submit: \"The Chattanooga Zoo at Warner Park, Chattanooga\" for day 5, \"Rock City Gardens, "
       "Chattanooga\" for day 6 and \"Tennessee Aquarium, Chattanooga\" for day 7"},
      {"[Dining for Nashville]",
       "To sum up, I will submit: \"Twigly, Nashville\" for day 1 and \"Bablu Fast Food, Nashville\", \"Kitchen "
       "King, Nashville\", \"Govinda's Confectionery, Nashville\" for day 2"},
      {"[Dining for Knoxville]",
       "To sum up, I will submit: \"Biryani By Kilo, Knoxville\", \"Open Kitchen, Knoxville\", \"Chit Chat, "
       "Knoxville\" for day 3 and \"Mamagoto, Knoxville\", \"La-Nawaab, Knoxville\", \"Tandoori Tadka, Knoxville\" "
       "for day 4"},
      {"[Dining for Chattanooga]",
       "To sum up, I will submit: \"Tpot, Chattanooga\", \"Liquid, Chattanooga\", \"Muradabadi, Chattanooga\" for "
       "day 5, \"Burger's King, Chattanooga\", \"Basil Tree, Chattanooga\", \"Sardar A Pure Meat Shop, "
       "Chattanooga\" for day 6, and \"Pizza Hut Delivery, Chattanooga\" for day 7"},
  };
  std::vector<std::vector<std::string>> steps;
  auto ls = leaves(target);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    auto parent = target.parent_of(ls[i].id);
    bool last = !parent || i + 1 == ls.size() || target.parent_of(ls[i + 1].id) != parent;
    std::string key = ls[i].text;
    if (parent && !target.is_leaf(*parent)) {
      auto grand = target.parent_of(*parent);
      std::string p = target.node(*parent).text;
      key = grand ? target.node(*grand).text + "/" + p : p;
      if (!submit.count(key)) key = p;
    }
    auto it = submit.find(key);
    if (it == submit.end()) it = submit.find(ls[i].text);
    steps.push_back(last && it != submit.end() ? std::vector<std::string>{it->second} : std::vector<std::string>{});
  }

  std::string q =
      "Please plan a trip for 2 people from Houston to 3 cities in Tennessee for 7 days, from March 21st to March "
      "27th, 2022, with a budget of $5,000. We want French and Mexican food, a private room where smoking is "
      "allowed, and we do not want to drive ourselves.";
  nlohmann::json row{{"id", "houston"},
                     {"query", q},
                     {"org", "Houston"},
                     {"dest", {"Nashville", "Knoxville", "Chattanooga"}},
                     {"days", 7},
                     {"people_number", 2},
                     {"budget", 5000},
                     {"local_constraint",
                      {{"house rule", "smoking"},
                       {"room type", "private room"},
                       {"cuisine", {"French", "Mexican"}},
                       {"transportation", "no self-driving"}}},
                     {"knowledge", "knowledge/manifest.json"}};
  auto dir = fixtures / "bench/travelplanner";
  fs::create_directories(dir);
  Script s{outline, steps, text::read_file((fixtures / "plans/travelplanner.txt").string())};
  record(cfg, lib, s, q, PlanFormat::TravelPlannerDays, kb, (dir / "houston.jsonl").string());
  text::write_file((fixtures / "bench/travelplanner.jsonl").string(), row.dump() + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: htp_fixturegen <repo root>\n";
    return 64;
  }
  fs::path root = argv[1];
  fs::path fixtures = root / "tests/fixtures";
  try {
    blocksworld(root, fixtures);
    trip(root, fixtures);
    travelplanner(root, fixtures);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
