"""Query texts shared by the test modules."""

TITLES_RAW = "lambda t (exists m, r Movie(m)(t, 'Spielberg', r))"
DIVISION_RAW = "lambda n (forall t (exists re, g Movies(t, re, 'Spielberg', g) implies exists ro Actors(n, t, ro)))"

TITLES_FRIENDLY = "{t^Title | exists m^Movie Movie(m^Movie)(t^Title, 'Spielberg'^Director)}"
DIVISION_FRIENDLY = (
    "{n^Name | foreach t^Title (Movies(t^Title, 'Spielberg'^Director) implies Actors(n^Name, t^Title))}"
)

# quantifier scope is tight, so the two conjuncts under the title pair are parenthesized
COUNT_FRIENDLY = (
    "{u^User, g^Genre, n^Number | n^Number = COUNT_Movie(lambda m^Movie (Rates(u^User)(m^Movie) and "
    "exists t^Title s^Title (Movie(m^Movie).t^Title = s^Title and Movies(s^Title, g^Genre))))}"
)

RATERS_RAW = "lambda u (exists s, m Rates(u)(s, m))"
SPIELBERG_REL_RAW = "lambda t (exists re, g Movies(t, re, 'Spielberg', g))"
UNSAFE_RAW = "lambda n^Number (n = n)"
