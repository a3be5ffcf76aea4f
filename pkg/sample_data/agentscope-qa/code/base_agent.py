"""Agent base class: message observation plus model-backed replies."""


class BaseAgent:
    def __init__(self, name, model=None, system_prompt=""):
        self.name = name
        self.model = model
        self.system_prompt = system_prompt
        self.memory = []

    def observe(self, message):
        self.memory.append(message)

    def reply(self, message):
        raise NotImplementedError

    def join(self, hub):
        pass

    def leave(self, hub):
        pass
