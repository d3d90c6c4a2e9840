from cli.main import run
