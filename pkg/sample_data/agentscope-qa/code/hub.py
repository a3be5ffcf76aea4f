"""Message hub: broadcast channel shared by participating agents."""


class MsgHub:
    """Context manager that fans every announced message out to all
    current participants."""

    def __init__(self, participants):
        self.participants = list(participants)

    def __enter__(self):
        for agent in self.participants:
            agent.join(self)
        return self

    def __exit__(self, *exc):
        for agent in self.participants:
            agent.leave(self)

    def broadcast(self, message):
        for agent in self.participants:
            agent.observe(message)

    def add(self, agent):
        self.participants.append(agent)
        agent.join(self)
