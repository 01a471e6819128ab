// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

// Output schemas of the three bundled skills, transcribed by hand from the
// published listings. Kept apart from skills/ so a bad edit there shows up.
namespace reference {

inline const std::map<std::string, std::string>& output_schemas() {
    static const std::map<std::string, std::string> kSchemas = {
        {"driver_fatigue_warning", R"js({
    "name": "driver_fatigue_warning",
    "parameters": {
      "properties": {
        "fatigue_state": {
          "type": "integer",
          "description": " Driver Fatigue State Level(max 2)",
          "default": 0
        }
      },
      "required": [
        "fatigue_state"
      ]
    }
})js"},
        {"proactive_caring_inquiry", R"js({
    "name": "proactive_caring_inquiry",
    "parameters": {
      "properties": {
        "query": {
          "type": "string",
          "description": "Provide care and inquiries based on observed situations"
        }
      },
      "required": [
        "query"
      ]
    }
})js"},
        {"dial_emergency_number", R"js({
    "name": "dial_emergency_number",
    "parameters": {
      "properties": {
        "phone_num": {
          "type": "string",
          "description": "Emergency contact phone number",
          "default":"123456789"
        },
        "scene_description": {
          "type": "string",
          "description": "Description of the on-site situation",
          "default":"I have detected a person fallen. He requires assistance."
        }
      },
      "required": [
        "phone_num"
      ]
    }
})js"},
        {"solve_problems", R"js({
    "name": "solve_problems",
    "parameters": {
      "properties": {
        "query": {
          "type": "string",
          "description": "Problem-solving request",
          "default":"Solve this problem and provide a brief process analysis"
        },
        "question_type": {
          "type": "string",
          "description": "Question type, facilitating the selection of a suitable agent model for solving problems.",
          "default":"STEM"
        }
       },
      "required": [
        "query"
      ]
    }
})js"},
        {"create_proactive_node", R"js({
    "name": "create_proactive_node",
    "parameters": {
      "properties": {
        "query": {
          "type": "string",
          "description": "queries requiring proactive reminders"
        }
      },
      "required": [
        "query"
      ]
    }
})js"},
    };
    return kSchemas;
}

inline const std::string kDefaultPhone = "123456789";
inline const std::string kDefaultScene = "I have detected a person fallen. He requires assistance.";

}  // namespace reference
