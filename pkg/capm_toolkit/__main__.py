from .cli import app

app(prog_name="capm_toolkit")
