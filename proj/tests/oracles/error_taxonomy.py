"""Counts E1/E2/E3 in a predictions JSONL file, independently of the C++ code,
and writes {"E1": .., "E2": .., "E3": ..} (tests/data/error_fixture_counts.json).

E1: entity rows whose predicted role polarity differs from the gold role's.
E2: entity rows whose predicted role belongs to another foundation than the tweet's gold one.
E3: tweets with two or more entities, all predicted one role, whose gold roles differ.
"""
import json
import sys

FOUNDATION = {
    "TargetOfCareHarm": "CareHarm", "EntityCausingHarm": "CareHarm", "EntityProvidingCare": "CareHarm",
    "TargetOfFairnessCheating": "FairnessCheating", "EntityEnsuringFairness": "FairnessCheating",
    "EntityDoingCheating": "FairnessCheating",
    "TargetOfLoyaltyBetrayal": "LoyaltyBetrayal", "EntityBeingLoyal": "LoyaltyBetrayal",
    "EntityDoingBetrayal": "LoyaltyBetrayal",
    "JustifiedAuthority": "AuthoritySubversion", "JustifiedAuthorityOver": "AuthoritySubversion",
    "FailingAuthority": "AuthoritySubversion", "FailingAuthorityOver": "AuthoritySubversion",
    "TargetOfPurityDegradation": "PurityDegradation", "EntityPreservingPurity": "PurityDegradation",
    "EntityCausingDegradation": "PurityDegradation",
}
NEGATIVE = {"EntityCausingHarm", "EntityDoingCheating", "EntityDoingBetrayal", "FailingAuthority",
            "EntityCausingDegradation"}


def main():
    e1 = e2 = e3 = 0
    for line in open(sys.argv[1]):
        if not line.strip():
            continue
        t = json.loads(line)
        ents = t["entities"]
        for e in ents:
            e1 += (e["role"] in NEGATIVE) != (e["gold_role"] in NEGATIVE)
            e2 += FOUNDATION[e["role"]] != t["gold_mf"]
        if len(ents) >= 2 and len({e["role"] for e in ents}) == 1 and len({e["gold_role"] for e in ents}) > 1:
            e3 += 1
    json.dump({"E1": e1, "E2": e2, "E3": e3}, open(sys.argv[2], "w"))


if __name__ == "__main__":
    main()
