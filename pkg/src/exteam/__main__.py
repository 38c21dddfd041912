from exteam.cli.main import app

app()
