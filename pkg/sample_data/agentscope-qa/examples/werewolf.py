"""Werewolf game example: nine role-playing agents in one msghub."""

ROLES = ["wolf", "wolf", "wolf", "villager", "villager", "villager",
         "seer", "witch", "moderator"]


def build_players(model):
    from agentflow import BaseAgent

    players = []
    for i, role in enumerate(ROLES):
        players.append(BaseAgent(f"{role}-{i}", model=model,
                                 system_prompt=f"You play the {role}."))
    return players


def run_round(hub, players):
    for player in players:
        reply = player.reply(hub.last_message)
        hub.broadcast(reply)
