from .meshcli import main

main()
